//! Replication studies and on-disk formats.
//!
//! [`run_benchmark`] fits FDNN and the two FPCA baselines for every training
//! size and replication of an [`ExperimentConfig`]. It scores them on a
//! common test sample and, for simulated designs, scores the Bayes rule on
//! the same draws so excess risks are paired.

pub mod config;

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use log::info;
use rand::seq::SliceRandom;
use rayon::prelude::*;

pub use config::{DataSource, ExperimentConfig, HyperOverride};

use crate::classifier::{fit_baseline, BaselineKind};
use crate::classifier::fit_fdnn;
use crate::dgp::{self, bayes_classify, DgpSpec, RiskEstimate};
use crate::error::{FdnnError, Result};
use crate::grid::csv::load_csv;
use crate::grid::{FunctionalObservation, SamplingGrid};
use crate::rng::{self, streams};
use crate::{Label, TrainConfig};

/// Classifiers compared by a benchmark, in CSV sort order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Bayes,
    Fdnn,
    NpBayes,
    Qda,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Bayes => "BAYES",
            Method::Fdnn => "FDNN",
            Method::NpBayes => "NB",
            Method::Qda => "QD",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Default points per axis for simulated designs.
pub fn default_grid(dim: usize) -> Vec<usize> {
    match dim {
        1 => vec![50],
        _ => vec![7; dim],
    }
}

/// Test-set outcome of one method in one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationRecord {
    pub n: usize,
    pub replication: usize,
    pub method: Method,
    pub errors: usize,
    pub test_size: usize,
    /// Test points the method got wrong and the Bayes rule got right.
    pub worse_than_bayes: Option<usize>,
    /// Test points the method got right and the Bayes rule got wrong.
    pub better_than_bayes: Option<usize>,
    pub runtime_s: f64,
}

impl ReplicationRecord {
    pub fn rate(&self) -> f64 {
        self.errors as f64 / self.test_size as f64
    }

    pub fn excess(&self) -> Option<f64> {
        Some((self.worse_than_bayes? as f64 - self.better_than_bayes? as f64) / self.test_size as f64)
    }
}

/// One line of the results table: mean test error over replications and
/// its standard error `sd / sqrt(R)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub dgp: String,
    pub n: usize,
    pub method: Method,
    pub rate: f64,
    pub se: f64,
    pub runtime_s: f64,
}

#[derive(Debug, Clone)]
pub struct BenchmarkResult {
    pub rows: Vec<ResultRow>,
    pub records: Vec<ReplicationRecord>,
}

impl BenchmarkResult {
    pub fn row(&self, n: usize, method: Method) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.n == n && r.method == method)
    }

    pub fn records_for(&self, n: usize, method: Method) -> impl Iterator<Item = &ReplicationRecord> {
        self.records.iter().filter(move |r| r.n == n && r.method == method)
    }

    /// Paired excess risk over Bayes, pooling every test draw of every
    /// replication. `None` when no Bayes rule is available.
    pub fn pooled_excess(&self, n: usize, method: Method) -> Option<RiskEstimate> {
        let mut total = 0usize;
        let mut worse = 0usize;
        let mut better = 0usize;
        for r in self.records_for(n, method) {
            worse += r.worse_than_bayes?;
            better += r.better_than_bayes?;
            total += r.test_size;
        }
        if total == 0 {
            return None;
        }
        let m = total as f64;
        let mean = (worse as f64 - better as f64) / m;
        // d takes values in {-1, 0, 1}, so sum(d^2) = worse + better
        let var = if total > 1 {
            ((worse + better) as f64 - m * mean * mean) / (m - 1.0)
        } else {
            0.0
        };
        Some(RiskEstimate {
            rate: mean,
            se: (var.max(0.0) / m).sqrt(),
            draws: total,
        })
    }

    /// Mean per-replication excess risk and its across-replication
    /// standard error.
    pub fn replication_excess(&self, n: usize, method: Method) -> Option<(f64, f64)> {
        let values: Vec<f64> = self.records_for(n, method).map(|r| r.excess()).collect::<Option<_>>()?;
        (!values.is_empty()).then(|| mean_and_se(&values))
    }

    pub fn to_csv(&self) -> String {
        results_csv(&self.rows)
    }
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let r = values.len() as f64;
    let mean = values.iter().sum::<f64>() / r;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1.0);
    (mean, (var / r).sqrt())
}

pub const CSV_HEADER: &str = "dgp,n,method,rate,se,runtime_s";

pub fn results_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{},{},{},{:?},{:?},{:?}", r.dgp, r.n, r.method, r.rate, r.se, r.runtime_s);
    }
    out
}

pub fn save_results(path: &Path, rows: &[ResultRow]) -> Result<()> {
    std::fs::write(path, results_csv(rows)).map_err(|e| FdnnError::io(path, e))
}

/// Labelled train and test observations for one replication, plus the
/// Bayes labels of the test points when the design is known.
struct ReplicationData {
    train: Vec<FunctionalObservation>,
    test: Vec<FunctionalObservation>,
    test_labels: Vec<Label>,
    bayes: Option<Vec<Label>>,
}

enum Source {
    Dgp { spec: DgpSpec, grid: Arc<SamplingGrid> },
    File { observations: Vec<FunctionalObservation> },
}

impl Source {
    fn prepare(cfg: &ExperimentConfig) -> Result<(String, Self)> {
        match &cfg.source {
            DataSource::Dgp { id, scale } => {
                let spec = DgpSpec::by_id_with_scale(*id, *scale)?;
                let axes = cfg.grid.clone().unwrap_or_else(|| default_grid(spec.dim()));
                let grid = Arc::new(SamplingGrid::equispaced(spec.dim(), &axes)?);
                Ok((id.to_string(), Source::Dgp { spec, grid }))
            }
            DataSource::File(path) => {
                let data = load_csv(path)?;
                if data.labels().is_none() {
                    return Err(FdnnError::invalid(format!("{} has unlabelled rows", path.display())));
                }
                let largest = cfg.sizes.iter().copied().max().unwrap_or(0);
                if largest + cfg.test_size > data.observations.len() {
                    return Err(FdnnError::InsufficientData(format!(
                        "{} has {} rows; n = {largest} plus test_size = {} do not fit",
                        path.display(),
                        data.observations.len(),
                        cfg.test_size
                    )));
                }
                let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                Ok((name, Source::File { observations: data.observations }))
            }
        }
    }

    /// Training samples are nested: the size-`n` sample is the first `n`
    /// draws of the largest one.
    fn draw(&self, largest: usize, test_size: usize, seed: u64) -> Result<ReplicationData> {
        match self {
            Source::Dgp { spec, grid } => {
                let train = dgp::generate_with(spec, largest, grid, &mut rng::stream(seed, streams::TRAIN_DATA))?;
                let test = dgp::generate_with(spec, test_size, grid, &mut rng::stream(seed, streams::TEST_DATA))?;
                let bayes = test
                    .coefficients
                    .iter()
                    .map(|xi| bayes_classify(spec, xi))
                    .collect::<Result<Vec<_>>>()?;
                Ok(ReplicationData {
                    test_labels: test.labels(),
                    train: train.observations,
                    test: test.observations,
                    bayes: Some(bayes),
                })
            }
            Source::File { observations } => {
                let mut idx: Vec<usize> = (0..observations.len()).collect();
                idx.shuffle(&mut rng::stream(seed, streams::TEST_DATA));
                let test: Vec<_> = idx[..test_size].iter().map(|&i| observations[i].clone()).collect();
                let train = idx[test_size..test_size + largest].iter().map(|&i| observations[i].clone()).collect();
                Ok(ReplicationData {
                    test_labels: test.iter().map(|o| o.label().expect("checked at load")).collect(),
                    test,
                    train,
                    bayes: None,
                })
            }
        }
    }
}

fn score(n: usize, replication: usize, method: Method, predicted: &[Label], data: &ReplicationData, runtime_s: f64) -> ReplicationRecord {
    let truth = &data.test_labels;
    let errors = predicted.iter().zip(truth).filter(|(p, y)| p != y).count();
    let (worse, better) = match &data.bayes {
        Some(bayes) => {
            let mut worse = 0;
            let mut better = 0;
            for ((p, b), y) in predicted.iter().zip(bayes).zip(truth) {
                match (p != y, b != y) {
                    (true, false) => worse += 1,
                    (false, true) => better += 1,
                    _ => {}
                }
            }
            (Some(worse), Some(better))
        }
        None => (None, None),
    };
    ReplicationRecord {
        n,
        replication,
        method,
        errors,
        test_size: truth.len(),
        worse_than_bayes: worse,
        better_than_bayes: better,
        runtime_s,
    }
}

fn run_replication(cfg: &ExperimentConfig, source: &Source, replication: usize) -> Result<Vec<ReplicationRecord>> {
    let seed = cfg.base_seed.wrapping_add(replication as u64);
    let largest = cfg.sizes.iter().copied().max().expect("validated");
    let data = source.draw(largest, cfg.test_size, seed)?;
    let mut out = Vec::new();
    for &n in &cfg.sizes {
        let train = &data.train[..n];

        let clock = Instant::now();
        let hyper = cfg.hyper.grid_for(n)?;
        let train_cfg = TrainConfig {
            seed: cfg.train.seed.wrapping_add(seed),
            ..cfg.train.clone()
        };
        let model = fit_fdnn(train, &hyper, &train_cfg, seed)?;
        let predicted = model.predict_all(&data.test)?;
        out.push(score(n, replication, Method::Fdnn, &predicted, &data, clock.elapsed().as_secs_f64()));

        for (kind, method) in [(BaselineKind::Qda, Method::Qda), (BaselineKind::NpBayes, Method::NpBayes)] {
            let clock = Instant::now();
            let model = fit_baseline(train, kind, &cfg.hyper.js(), seed)?;
            let predicted = model.predict_all(&data.test)?;
            out.push(score(n, replication, method, &predicted, &data, clock.elapsed().as_secs_f64()));
        }

        if let Some(bayes) = &data.bayes {
            out.push(score(n, replication, Method::Bayes, bayes, &data, 0.0));
        }
        info!("replication {replication}, n = {n} done");
    }
    Ok(out)
}

/// Runs every replication of `cfg` and aggregates the results.
///
/// Replication `r` is seeded with `base_seed + r`, and records are
/// aggregated in replication order, so the output does not depend on
/// `cfg.threads`.
pub fn run_benchmark(cfg: &ExperimentConfig) -> Result<BenchmarkResult> {
    cfg.validate()?;
    let (dgp_name, source) = Source::prepare(cfg)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| FdnnError::invalid(format!("cannot start worker pool: {e}")))?;
    let per_replication = pool.install(|| {
        (0..cfg.replications)
            .into_par_iter()
            .map(|r| run_replication(cfg, &source, r))
            .collect::<Result<Vec<_>>>()
    })?;
    let records: Vec<ReplicationRecord> = per_replication.into_iter().flatten().collect();

    let mut keys: Vec<(usize, Method)> = records.iter().map(|r| (r.n, r.method)).collect();
    keys.sort_unstable();
    keys.dedup();
    let rows = keys
        .into_iter()
        .map(|(n, method)| {
            let mine: Vec<&ReplicationRecord> = records.iter().filter(|r| r.n == n && r.method == method).collect();
            let rates: Vec<f64> = mine.iter().map(|r| r.rate()).collect();
            let (rate, se) = mean_and_se(&rates);
            let runtime_s = if cfg.record_runtime {
                mine.iter().map(|r| r.runtime_s).sum::<f64>() / mine.len() as f64
            } else {
                0.0
            };
            ResultRow {
                dgp: dgp_name.clone(),
                n,
                method,
                rate,
                se,
                runtime_s,
            }
        })
        .collect();
    let result = BenchmarkResult { rows, records };
    if let Some(path) = &cfg.output {
        save_results(path, &result.rows)?;
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(id: u32) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::for_dgp(id);
        cfg.sizes = vec![30, 60];
        cfg.replications = 2;
        cfg.test_size = 100;
        cfg.grid = Some(if id == 4 { vec![4, 4] } else { vec![12] });
        cfg.hyper = HyperOverride {
            depths: Some(vec![1]),
            js: Some(vec![2, 3]),
            widths: Some(vec![4]),
            bounds: Some(vec![10.0]),
        };
        cfg.train.epochs = 5;
        cfg
    }

    #[test]
    fn rows_are_sorted_and_complete() {
        let res = run_benchmark(&tiny(1)).unwrap();
        let keys: Vec<(usize, &str)> = res.rows.iter().map(|r| (r.n, r.method.name())).collect();
        assert_eq!(
            keys,
            vec![
                (30, "BAYES"),
                (30, "FDNN"),
                (30, "NB"),
                (30, "QD"),
                (60, "BAYES"),
                (60, "FDNN"),
                (60, "NB"),
                (60, "QD")
            ]
        );
        assert_eq!(res.records.len(), 2 * 2 * 4);
        for row in &res.rows {
            assert!((0.0..=1.0).contains(&row.rate));
            assert_eq!(row.runtime_s, 0.0);
        }
        let csv = res.to_csv();
        assert!(csv.starts_with("dgp,n,method,rate,se,runtime_s\n1,30,BAYES,"));
    }

    #[test]
    fn bayes_rate_is_identical_across_sizes() {
        let res = run_benchmark(&tiny(2)).unwrap();
        assert_eq!(res.row(30, Method::Bayes).unwrap().rate, res.row(60, Method::Bayes).unwrap().rate);
        let ex = res.pooled_excess(30, Method::Bayes).unwrap();
        assert_eq!(ex.rate, 0.0);
        assert_eq!(ex.se, 0.0);
    }

    #[test]
    fn thread_count_does_not_change_output() {
        let mut cfg = tiny(4);
        cfg.threads = 1;
        let serial = run_benchmark(&cfg).unwrap().to_csv();
        cfg.threads = 3;
        assert_eq!(serial, run_benchmark(&cfg).unwrap().to_csv());
    }

    #[test]
    fn pooled_excess_counts() {
        let rec = |worse, better| ReplicationRecord {
            n: 10,
            replication: 0,
            method: Method::Fdnn,
            errors: 0,
            test_size: 4,
            worse_than_bayes: Some(worse),
            better_than_bayes: Some(better),
            runtime_s: 0.0,
        };
        let res = BenchmarkResult {
            rows: vec![],
            records: vec![rec(2, 0), rec(1, 1)],
        };
        let d = [1.0, 1.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0];
        let mean = d.iter().sum::<f64>() / 8.0;
        let var = d.iter().map(|x: &f64| (x - mean).powi(2)).sum::<f64>() / 7.0;
        let ex = res.pooled_excess(10, Method::Fdnn).unwrap();
        assert!((ex.rate - mean).abs() < 1e-15);
        assert!((ex.se - (var / 8.0).sqrt()).abs() < 1e-15);
        let (m, _) = res.replication_excess(10, Method::Fdnn).unwrap();
        assert!((m - 0.25).abs() < 1e-15);
    }
}
