//! Experiment configuration in TOML with `[experiment]`, `[train]` and
//! `[hyper]` sections. Unknown keys and sections are errors.
//!
//! ```toml
//! [experiment]
//! dgp = 1
//! sizes = [40, 100, 200, 400]
//! replications = 20
//! test_size = 500
//! base_seed = 2022
//! output = "dgp1.csv"
//!
//! [train]
//! epochs = 120
//!
//! [hyper]
//! js = [2, 4]
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::classifier::{HyperGrid, DEFAULT_BOUNDS, DEFAULT_JS, DEFAULT_WIDTHS};
use crate::dgp::GaussianScale;
use crate::dnn::TrainConfig;
use crate::error::{FdnnError, Result};

/// Where the data of an experiment comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Dgp { id: u32, scale: GaussianScale },
    /// Labelled CSV; each replication draws a stratified train/test split.
    File(PathBuf),
}

/// Explicit axes for the architecture search. Missing axes keep defaults;
/// missing `depths` keeps the `log n` rule.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperOverride {
    pub depths: Option<Vec<usize>>,
    pub js: Option<Vec<usize>>,
    pub widths: Option<Vec<usize>>,
    pub bounds: Option<Vec<f64>>,
}

impl HyperOverride {
    /// Candidate grid for a training set of size `n`.
    pub fn grid_for(&self, n: usize) -> Result<HyperGrid> {
        let default_depths = {
            let log_n = (n.max(2) as f64).ln().round() as usize;
            vec![log_n.saturating_sub(1).max(1), log_n.max(1)]
        };
        HyperGrid::product(
            self.depths.as_deref().unwrap_or(&default_depths),
            self.js.as_deref().unwrap_or(&DEFAULT_JS),
            self.widths.as_deref().unwrap_or(&DEFAULT_WIDTHS),
            self.bounds.as_deref().unwrap_or(&DEFAULT_BOUNDS),
        )
    }

    /// Truncation levels offered to the baselines.
    pub fn js(&self) -> Vec<usize> {
        self.js.clone().unwrap_or_else(|| DEFAULT_JS.to_vec())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub source: DataSource,
    pub sizes: Vec<usize>,
    pub replications: usize,
    pub test_size: usize,
    /// Points per grid axis for simulated data.
    pub grid: Option<Vec<usize>>,
    pub hyper: HyperOverride,
    pub train: TrainConfig,
    pub base_seed: u64,
    pub output: Option<PathBuf>,
    /// Worker threads for replications; `1` runs serially, `0` uses rayon's default.
    pub threads: usize,
    /// Write measured runtimes into the CSV (makes reruns differ).
    pub record_runtime: bool,
}

impl ExperimentConfig {
    /// Desk-scale defaults for a built-in design.
    pub fn for_dgp(id: u32) -> Self {
        Self {
            source: DataSource::Dgp {
                id,
                scale: GaussianScale::default(),
            },
            sizes: vec![40, 100, 200, 400],
            replications: 20,
            test_size: 500,
            grid: None,
            hyper: HyperOverride::default(),
            train: TrainConfig::default(),
            base_seed: 2022,
            output: None,
            threads: 1,
            record_runtime: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(FdnnError::invalid("replications must be at least 1"));
        }
        if self.sizes.is_empty() || self.sizes.contains(&0) {
            return Err(FdnnError::invalid("sizes must be a nonempty list of positive integers"));
        }
        if self.test_size == 0 {
            return Err(FdnnError::invalid("test_size must be positive"));
        }
        if let Some(p) = &self.output {
            if p.as_os_str().is_empty() {
                return Err(FdnnError::invalid("output path is empty"));
            }
        }
        if let DataSource::File(p) = &self.source {
            if p.as_os_str().is_empty() {
                return Err(FdnnError::invalid("input path is empty"));
            }
        }
        self.train.validate()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| FdnnError::io(path, e))?;
        let mut cfg = Self::parse(&text, &path.display().to_string())?;
        // relative paths in the file are relative to the file
        let base = path.parent().unwrap_or(Path::new(""));
        if let DataSource::File(p) = &mut cfg.source {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(p) = &mut cfg.output {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// Parses configuration text; `source` names it in error messages.
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start].matches('\n').count() + 1)
                .unwrap_or(0);
            FdnnError::Parse {
                path: source.to_string(),
                line,
                msg: e.message().to_string(),
            }
        })?;
        raw.into_config()
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: RawExperiment,
    #[serde(default)]
    train: RawTrain,
    #[serde(default)]
    hyper: HyperOverride,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    dgp: Option<u32>,
    input: Option<PathBuf>,
    gaussian_scale: Option<String>,
    sizes: Option<Vec<usize>>,
    replications: Option<usize>,
    test_size: Option<usize>,
    grid: Option<Vec<usize>>,
    base_seed: Option<u64>,
    output: Option<PathBuf>,
    threads: Option<usize>,
    record_runtime: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTrain {
    learning_rate: Option<f64>,
    decay: Option<f64>,
    epochs: Option<usize>,
    batch_size: Option<usize>,
    seed: Option<u64>,
}

impl RawConfig {
    fn into_config(self) -> Result<ExperimentConfig> {
        let e = self.experiment;
        let source = match (e.dgp, e.input) {
            (Some(id), None) => DataSource::Dgp {
                id,
                scale: e.gaussian_scale.as_deref().map(str::parse).transpose()?.unwrap_or_default(),
            },
            (None, Some(path)) => {
                if e.gaussian_scale.is_some() {
                    return Err(FdnnError::invalid("gaussian_scale only applies to simulated designs"));
                }
                DataSource::File(path)
            }
            _ => return Err(FdnnError::invalid("set exactly one of experiment.dgp and experiment.input")),
        };
        let mut cfg = ExperimentConfig::for_dgp(1);
        cfg.source = source;
        if let Some(v) = e.sizes {
            cfg.sizes = v;
        }
        if let Some(v) = e.replications {
            cfg.replications = v;
        }
        if let Some(v) = e.test_size {
            cfg.test_size = v;
        }
        cfg.grid = e.grid;
        if let Some(v) = e.base_seed {
            cfg.base_seed = v;
        }
        cfg.output = e.output;
        if let Some(v) = e.threads {
            cfg.threads = v;
        }
        if let Some(v) = e.record_runtime {
            cfg.record_runtime = v;
        }
        let t = self.train;
        let d = TrainConfig::default();
        cfg.train = TrainConfig {
            learning_rate: t.learning_rate.unwrap_or(d.learning_rate),
            decay: t.decay.unwrap_or(d.decay),
            epochs: t.epochs.unwrap_or(d.epochs),
            batch_size: t.batch_size.unwrap_or(d.batch_size),
            seed: t.seed.unwrap_or(d.seed),
        };
        cfg.hyper = self.hyper;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = ExperimentConfig::parse("[experiment]\ndgp = 2\n", "c").unwrap();
        assert_eq!(cfg.sizes, vec![40, 100, 200, 400]);
        assert_eq!(cfg.replications, 20);
        assert_eq!(cfg.test_size, 500);
        assert_eq!(
            cfg.source,
            DataSource::Dgp {
                id: 2,
                scale: GaussianScale::StdDev
            }
        );
    }

    #[test]
    fn full_config() {
        let text = r#"
[experiment]
dgp = 3
gaussian_scale = "variance"
sizes = [40, 400]
replications = 2
test_size = 100
grid = [5, 5]
base_seed = 7
output = "out.csv"
threads = 2

[train]
epochs = 10
learning_rate = 0.1

[hyper]
js = [2, 3]
depths = [1]
"#;
        let cfg = ExperimentConfig::parse(text, "c").unwrap();
        assert_eq!(cfg.train.epochs, 10);
        assert_eq!(cfg.hyper.js(), vec![2, 3]);
        assert_eq!(cfg.hyper.grid_for(400).unwrap().candidates().len(), 2 * 3 * 2);
        assert_eq!(cfg.grid, Some(vec![5, 5]));
        assert_eq!(cfg.threads, 2);
    }

    #[test]
    fn unknown_keys_fail_loudly() {
        let err = ExperimentConfig::parse("[experiment]\ndgp = 1\nreplicatoins = 3\n", "c.toml").unwrap_err();
        match err {
            FdnnError::Parse { line, path, .. } => {
                assert_eq!(path, "c.toml");
                assert_eq!(line, 3);
            }
            other => panic!("{other:?}"),
        }
        assert!(ExperimentConfig::parse("[experiment]\ndgp = 1\n[extra]\n", "c").is_err());
        assert!(ExperimentConfig::parse("[experiment]\ndgp = 1\n[train]\nmomentum = 0.9\n", "c").is_err());
    }

    #[test]
    fn invalid_values() {
        assert!(ExperimentConfig::parse("[experiment]\ndgp = 1\nreplications = 0\n", "c").is_err());
        assert!(ExperimentConfig::parse("[experiment]\ndgp = 1\nsizes = []\n", "c").is_err());
        assert!(ExperimentConfig::parse("[experiment]\n", "c").is_err());
        assert!(ExperimentConfig::parse("[experiment]\ndgp = 1\ninput = \"x.csv\"\n", "c").is_err());
        assert!(ExperimentConfig::parse("[experiment]\ndgp = 1\ngaussian_scale = \"sigma\"\n", "c").is_err());
    }
}
