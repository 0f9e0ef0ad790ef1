//! Baseline score classifiers: Gaussian QDA with diagonal covariances and a
//! product kernel-density Bayes rule.

use std::f64::consts::PI;

use log::warn;

use super::{check_training_set, misclassification_rate, stratified_split};
use crate::error::{FdnnError, Result};
use crate::fpca::{EigenSystem, ScoreMatrix};
use crate::grid::FunctionalObservation;
use crate::Label;

const VARIANCE_FLOOR: f64 = 1e-12;

/// Diagonal Gaussian for the scores of one class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassGaussian {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub log_prior: f64,
}

impl ClassGaussian {
    fn log_posterior(&self, x: &[f64]) -> f64 {
        self.log_prior
            + self
                .mean
                .iter()
                .zip(&self.variance)
                .zip(x)
                .map(|((m, v), x)| -0.5 * (2.0 * PI * v).ln() - (x - m).powi(2) / (2.0 * v))
                .sum::<f64>()
    }
}

/// Quadratic discriminant on FPCA scores.
#[derive(Debug, Clone, PartialEq)]
pub struct QdaModel {
    pub positive: ClassGaussian,
    pub negative: ClassGaussian,
}

impl QdaModel {
    /// Plug-in model from known parameters.
    pub fn from_parameters(positive: ClassGaussian, negative: ClassGaussian) -> Result<Self> {
        if positive.mean.len() != negative.mean.len()
            || positive.mean.len() != positive.variance.len()
            || negative.mean.len() != negative.variance.len()
        {
            return Err(FdnnError::invalid("class parameter lengths differ"));
        }
        if positive.variance.iter().chain(&negative.variance).any(|&v| v <= 0.0 || v.is_nan()) {
            return Err(FdnnError::invalid("variances must be positive"));
        }
        Ok(Self { positive, negative })
    }

    pub fn dim(&self) -> usize {
        self.positive.mean.len()
    }

    /// Larger Gaussian log posterior wins; equality goes to `+1`.
    pub fn predict(&self, x: &[f64]) -> Result<Label> {
        if x.len() != self.dim() {
            return Err(FdnnError::invalid(format!("expected {} scores, got {}", self.dim(), x.len())));
        }
        Ok(Label::from_sign(self.positive.log_posterior(x) - self.negative.log_posterior(x)))
    }
}

fn class_rows(scores: &ScoreMatrix, label: Label) -> Vec<Vec<f64>> {
    scores.class_rows(label).into_iter().map(|i| scores.row(i)).collect()
}

fn log_prior(count: usize, total: usize) -> f64 {
    (count as f64 / total as f64).ln()
}

/// Per-class sample means and (maximum-likelihood) variances of the scores.
///
/// A coordinate with zero spread inside a class is floored at `1e-12`.
pub fn fit_qda(scores: &ScoreMatrix) -> Result<QdaModel> {
    let fit_class = |label: Label| -> Result<ClassGaussian> {
        let rows = class_rows(scores, label);
        if rows.len() < 2 {
            return Err(FdnnError::DegenerateData(format!(
                "class {label} has {} samples, QDA needs at least 2",
                rows.len()
            )));
        }
        let m = rows.len() as f64;
        let j = scores.dim();
        let mean: Vec<f64> = (0..j).map(|k| rows.iter().map(|r| r[k]).sum::<f64>() / m).collect();
        let variance: Vec<f64> = (0..j)
            .map(|k| {
                let v = rows.iter().map(|r| (r[k] - mean[k]).powi(2)).sum::<f64>() / m;
                if v < VARIANCE_FLOOR {
                    warn!("class {label} score {} has variance {v:e}; flooring at {VARIANCE_FLOOR:e}", k + 1);
                    VARIANCE_FLOOR
                } else {
                    v
                }
            })
            .collect();
        Ok(ClassGaussian {
            mean,
            variance,
            log_prior: log_prior(rows.len(), scores.len()),
        })
    };
    Ok(QdaModel {
        positive: fit_class(Label::Pos)?,
        negative: fit_class(Label::Neg)?,
    })
}

/// One-dimensional Gaussian kernel density estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct Kde {
    pub points: Vec<f64>,
    pub bandwidth: f64,
}

impl Kde {
    /// Silverman's rule `1.06 σ̂ m^{-1/5}` with the sample standard deviation.
    pub fn silverman(points: Vec<f64>) -> Result<Self> {
        let m = points.len() as f64;
        let mean = points.iter().sum::<f64>() / m;
        let sd = (points.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt();
        let bandwidth = 1.06 * sd * m.powf(-0.2);
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(FdnnError::DegenerateData(format!("kernel bandwidth is {bandwidth}")));
        }
        Ok(Self { points, bandwidth })
    }

    /// `log (1/(m h)) Σ_i K((x - x_i)/h)`, computed with log-sum-exp.
    pub fn ln_density(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        let exps: Vec<f64> = self.points.iter().map(|p| -0.5 * ((x - p) / h).powi(2)).collect();
        let top = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = exps.iter().map(|e| (e - top).exp()).sum();
        top + sum.ln() - (self.points.len() as f64 * h).ln() - 0.5 * (2.0 * PI).ln()
    }
}

/// Per-class, per-coordinate KDEs combined as a product density.
#[derive(Debug, Clone, PartialEq)]
pub struct NpBayesModel {
    pub positive: Vec<Kde>,
    pub negative: Vec<Kde>,
    pub log_prior_positive: f64,
    pub log_prior_negative: f64,
}

impl NpBayesModel {
    pub fn dim(&self) -> usize {
        self.positive.len()
    }

    pub fn predict(&self, x: &[f64]) -> Result<Label> {
        if x.len() != self.dim() {
            return Err(FdnnError::invalid(format!("expected {} scores, got {}", self.dim(), x.len())));
        }
        let score = |kdes: &[Kde], prior: f64| prior + kdes.iter().zip(x).map(|(k, v)| k.ln_density(*v)).sum::<f64>();
        Ok(Label::from_sign(
            score(&self.positive, self.log_prior_positive) - score(&self.negative, self.log_prior_negative),
        ))
    }
}

pub fn fit_npbayes(scores: &ScoreMatrix) -> Result<NpBayesModel> {
    let fit_class = |label: Label| -> Result<Vec<Kde>> {
        let rows = class_rows(scores, label);
        if rows.len() < 5 {
            return Err(FdnnError::InsufficientData(format!(
                "class {label} has {} samples, the KDE classifier needs at least 5",
                rows.len()
            )));
        }
        (0..scores.dim())
            .map(|k| Kde::silverman(rows.iter().map(|r| r[k]).collect()))
            .collect()
    };
    let n_pos = scores.class_rows(Label::Pos).len();
    Ok(NpBayesModel {
        positive: fit_class(Label::Pos)?,
        negative: fit_class(Label::Neg)?,
        log_prior_positive: log_prior(n_pos, scores.len()),
        log_prior_negative: log_prior(scores.len() - n_pos, scores.len()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    Qda,
    NpBayes,
}

#[derive(Debug, Clone)]
enum ScoreClassifier {
    Qda(QdaModel),
    NpBayes(NpBayesModel),
}

impl ScoreClassifier {
    fn fit(kind: BaselineKind, scores: &ScoreMatrix) -> Result<Self> {
        Ok(match kind {
            BaselineKind::Qda => ScoreClassifier::Qda(fit_qda(scores)?),
            BaselineKind::NpBayes => ScoreClassifier::NpBayes(fit_npbayes(scores)?),
        })
    }

    fn predict(&self, x: &[f64]) -> Result<Label> {
        match self {
            ScoreClassifier::Qda(m) => m.predict(x),
            ScoreClassifier::NpBayes(m) => m.predict(x),
        }
    }
}

/// A baseline on the shared FPCA basis with its selected truncation level.
#[derive(Debug, Clone)]
pub struct BaselineModel {
    pub eigensystem: EigenSystem,
    pub j: usize,
    /// `(J, validation error)` for every level tried.
    pub selection_report: Vec<(usize, f64)>,
    model: ScoreClassifier,
}

impl BaselineModel {
    pub fn predict(&self, x: &FunctionalObservation) -> Result<Label> {
        self.model.predict(&self.eigensystem.project(x, self.j)?)
    }

    pub fn predict_all(&self, xs: &[FunctionalObservation]) -> Result<Vec<Label>> {
        let scores = self.eigensystem.project_all(xs, self.j)?;
        scores
            .row_iter()
            .map(|r| self.model.predict(&r.iter().copied().collect::<Vec<_>>()))
            .collect()
    }
}

/// Fits a baseline on the pooled FPCA basis, choosing `J` from `js` with
/// the same stratified 80/20 split the FDNN selection uses.
pub fn fit_baseline(samples: &[FunctionalObservation], kind: BaselineKind, js: &[usize], split_seed: u64) -> Result<BaselineModel> {
    let labels = check_training_set(samples)?;
    let max_j = js.iter().copied().max().ok_or_else(|| FdnnError::invalid("no truncation levels given"))?;
    let eig = EigenSystem::fit(samples, samples[0].grid().len())?;
    if max_j > eig.len() || js.contains(&0) {
        return Err(FdnnError::invalid(format!(
            "truncation levels must lie in 1..={}",
            eig.len()
        )));
    }
    let all = ScoreMatrix::new(eig.project_all(samples, max_j)?, labels)?;
    let split = stratified_split(all.labels(), split_seed)?;
    let train = all.subset(&split.train);
    let valid = all.subset(&split.validation);
    let mut levels = js.to_vec();
    levels.sort_unstable();
    levels.dedup();
    let mut report = Vec::with_capacity(levels.len());
    for &j in &levels {
        let model = ScoreClassifier::fit(kind, &train.truncate(j)?)?;
        let v = valid.truncate(j)?;
        let pred = (0..v.len()).map(|i| model.predict(&v.row(i))).collect::<Result<Vec<_>>>()?;
        report.push((j, misclassification_rate(&pred, v.labels())?));
    }
    let best = report
        .iter()
        .fold(None::<(usize, f64)>, |acc, &(j, e)| match acc {
            Some((bj, be)) if be <= e => Some((bj, be)),
            _ => Some((j, e)),
        })
        .expect("at least one level")
        .0;
    let model = ScoreClassifier::fit(kind, &all.truncate(best)?)?;
    Ok(BaselineModel {
        eigensystem: eig,
        j: best,
        selection_report: report,
        model,
    })
}
