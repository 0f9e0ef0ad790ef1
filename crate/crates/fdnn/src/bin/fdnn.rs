use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};

use fdnn::bench::{self, ExperimentConfig};
use fdnn::classifier::{fit_fdnn, load_model, misclassification_rate, save_model};
use fdnn::dgp::{self, DgpSpec, GaussianScale};
use fdnn::grid::csv::{load_csv, save_csv};
use fdnn::{FdnnError, HyperGrid, Result, SamplingGrid, TrainConfig};

#[derive(Parser)]
#[command(name = "fdnn", version, about = "Functional deep neural network classifier")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw labelled observations from a built-in design.
    Simulate {
        #[arg(long)]
        dgp: u32,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Points per axis, e.g. `50` or `7,7`.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<usize>>,
        /// How the Gaussian designs read their diagonal: `sd` or `variance`.
        #[arg(long, default_value = "sd")]
        gaussian_scale: GaussianScale,
    },
    /// Fit an FDNN classifier to a labelled CSV.
    Fit {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Label the rows of a CSV with a saved model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        /// Write labels here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a replication study described by a config file.
    Benchmark {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's output path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a saved model's selection report and eigenvalue spectrum.
    Inspect {
        #[arg(long)]
        model: PathBuf,
    },
}

fn simulate(id: u32, n: usize, seed: u64, out: PathBuf, grid: Option<Vec<usize>>, scale: GaussianScale) -> Result<()> {
    let spec = DgpSpec::by_id_with_scale(id, scale)?;
    let axes = grid.unwrap_or_else(|| bench::default_grid(spec.dim()));
    let grid = Arc::new(SamplingGrid::equispaced(spec.dim(), &axes)?);
    let sim = dgp::generate(&spec, n, &grid, seed)?;
    save_csv(&out, &grid, &sim.observations)?;
    println!("wrote {n} observations of design {id} to {}", out.display());
    Ok(())
}

fn fit(input: PathBuf, out: PathBuf, seed: u64, epochs: Option<usize>) -> Result<()> {
    let data = load_csv(&input)?;
    let mut cfg = TrainConfig {
        seed,
        ..TrainConfig::default()
    };
    if let Some(e) = epochs {
        cfg.epochs = e;
    }
    let hyper = HyperGrid::default_for(data.observations.len());
    let model = fit_fdnn(&data.observations, &hyper, &cfg, seed)?;
    save_model(&out, &model)?;
    let h = model.hyper;
    println!(
        "selected L={} J={} width={} B={}; model written to {}",
        h.depth,
        h.j,
        h.width,
        h.bound,
        out.display()
    );
    Ok(())
}

fn predict(model: PathBuf, input: PathBuf, out: Option<PathBuf>) -> Result<()> {
    let model = load_model(&model)?;
    let data = load_csv(&input)?;
    let predicted = model.predict_all(&data.observations)?;
    let mut text = String::new();
    for p in &predicted {
        text.push_str(&p.to_string());
        text.push('\n');
    }
    match &out {
        Some(path) => std::fs::write(path, &text).map_err(|e| FdnnError::io(path, e))?,
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| FdnnError::io("<stdout>", e))?,
    }
    if let Some(truth) = data.labels() {
        let accuracy = 1.0 - misclassification_rate(&predicted, &truth)?;
        eprintln!("accuracy: {accuracy:.4}");
    }
    Ok(())
}

fn benchmark(config: PathBuf, out: Option<PathBuf>) -> Result<()> {
    let mut cfg = ExperimentConfig::load(&config)?;
    if out.is_some() {
        cfg.output = out;
    }
    let result = bench::run_benchmark(&cfg)?;
    match &cfg.output {
        Some(path) => println!("wrote {} rows to {}", result.rows.len(), path.display()),
        None => print!("{}", result.to_csv()),
    }
    Ok(())
}

fn inspect(model: PathBuf) -> Result<()> {
    let model = load_model(&model)?;
    let h = model.hyper;
    println!("grid: {} points, axes {:?}", model.grid().len(), model.grid().points_per_axis());
    println!("selected: L={} J={} width={} B={}", h.depth, h.j, h.width, h.bound);
    println!("eigenvalues:");
    for (k, l) in model.eigensystem.eigenvalues().iter().take(10).enumerate() {
        println!("  {:>2}  {l:.6e}", k + 1);
    }
    println!("selection:");
    println!("  {:>2} {:>2} {:>5} {:>6}  error", "L", "J", "width", "B");
    for row in &model.selection_report {
        let c = row.hyper;
        println!("  {:>2} {:>2} {:>5} {:>6}  {:.4}", c.depth, c.j, c.width, c.bound, row.validation_error);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate {
            dgp,
            n,
            seed,
            out,
            grid,
            gaussian_scale,
        } => simulate(dgp, n, seed, out, grid, gaussian_scale),
        Command::Fit { input, out, seed, epochs } => fit(input, out, seed, epochs),
        Command::Predict { model, input, out } => predict(model, input, out),
        Command::Benchmark { config, out } => benchmark(config, out),
        Command::Inspect { model } => inspect(model),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
