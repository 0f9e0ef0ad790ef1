//! A reduced replication study from an inline config, printed as the
//! results CSV with paired excess risks.
//!
//! cargo run --release --example benchmark_table

use fdnn::bench::{run_benchmark, ExperimentConfig, Method};

const CONFIG: &str = r#"
[experiment]
dgp = 1
sizes = [40, 200]
replications = 5
test_size = 500
base_seed = 7

[hyper]
widths = [16]
"#;

fn main() -> fdnn::Result<()> {
    let cfg = ExperimentConfig::parse(CONFIG, "inline")?;
    let result = run_benchmark(&cfg)?;
    print!("{}", result.to_csv());
    println!();
    for &n in &cfg.sizes {
        for method in [Method::Fdnn, Method::Qda, Method::NpBayes] {
            let ex = result.pooled_excess(n, method).expect("simulated design");
            println!("n={n:<3} {:<4} excess over Bayes {:+.4} (se {:.4})", method.name(), ex.rate, ex.se);
        }
    }
    Ok(())
}
