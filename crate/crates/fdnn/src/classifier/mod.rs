//! End-to-end FDNN fitting with split-sample architecture selection, plus
//! the quadratic discriminant and product-KDE baselines.

mod baseline;

pub mod model_file;

pub use model_file::{load_model, model_to_string, parse_model, save_model};
pub use baseline::{
    fit_baseline, fit_npbayes, fit_qda, BaselineKind, BaselineModel, ClassGaussian, Kde, NpBayesModel, QdaModel,
};

use std::sync::Arc;

use log::debug;
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::dnn::{self, NetworkArchitecture, NetworkParams, TrainConfig};
use crate::error::{FdnnError, Result};
use crate::fpca::{EigenSystem, ScoreMatrix};
use crate::grid::{ensure_same_grid, FunctionalObservation, SamplingGrid};
use crate::rng;
use crate::Label;

/// Fraction of each class held out for validation.
pub const VALIDATION_FRACTION: f64 = 0.2;

/// One candidate `(L, J, width, B)`; every hidden layer has `width` units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparams {
    pub depth: usize,
    pub j: usize,
    pub width: usize,
    pub bound: f64,
}

impl Hyperparams {
    pub fn architecture(&self) -> Result<NetworkArchitecture> {
        NetworkArchitecture::uniform(self.j, self.depth, self.width, self.bound)
    }

    /// Lexicographic `(J, L, width, B)` order used to break selection ties.
    fn simplicity_cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.j, self.depth, self.width)
            .cmp(&(other.j, other.depth, other.width))
            .then(self.bound.total_cmp(&other.bound))
    }
}

/// Candidate set for the data-splitting selection.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperGrid {
    candidates: Vec<Hyperparams>,
}

impl HyperGrid {
    /// Candidates are stored in `(J, L, width, B)` order.
    pub fn new(mut candidates: Vec<Hyperparams>) -> Result<Self> {
        if candidates.is_empty() {
            return Err(FdnnError::invalid("hyperparameter grid is empty"));
        }
        for c in &candidates {
            c.architecture()?;
        }
        candidates.sort_by(Hyperparams::simplicity_cmp);
        candidates.dedup();
        Ok(Self { candidates })
    }

    /// Full Cartesian product of the given axes.
    pub fn product(depths: &[usize], js: &[usize], widths: &[usize], bounds: &[f64]) -> Result<Self> {
        let mut out = Vec::new();
        for &depth in depths {
            for &j in js {
                for &width in widths {
                    for &bound in bounds {
                        out.push(Hyperparams { depth, j, width, bound });
                    }
                }
            }
        }
        Self::new(out)
    }

    /// Default grid for `n` training samples: depth around `log n`,
    /// widths 8/16/32, `J ∈ {2,4,6,10}`, `B ∈ {10,100}`.
    pub fn default_for(n: usize) -> Self {
        let log_n = (n.max(2) as f64).ln().round() as usize;
        let depths = [log_n.saturating_sub(1).max(1), log_n.max(1)];
        Self::product(&depths, &DEFAULT_JS, &DEFAULT_WIDTHS, &DEFAULT_BOUNDS).expect("default grid is valid")
    }

    pub fn candidates(&self) -> &[Hyperparams] {
        &self.candidates
    }

    pub fn max_j(&self) -> usize {
        self.candidates.iter().map(|c| c.j).max().unwrap_or(0)
    }

    /// Distinct truncation levels, ascending.
    pub fn js(&self) -> Vec<usize> {
        let mut js: Vec<usize> = self.candidates.iter().map(|c| c.j).collect();
        js.sort_unstable();
        js.dedup();
        js
    }
}

pub const DEFAULT_JS: [usize; 4] = [2, 4, 6, 10];
pub const DEFAULT_WIDTHS: [usize; 3] = [8, 16, 32];
pub const DEFAULT_BOUNDS: [f64; 2] = [10.0, 100.0];

/// Validation error of one candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionRow {
    pub hyper: Hyperparams,
    pub validation_error: f64,
}

/// Score columns whose standard deviation falls below this fraction of the
/// largest are numerically null; they are centred but not rescaled, so
/// rounding noise is not blown up to unit variance.
const SCALE_FLOOR: f64 = 1e-6;

/// Per-coordinate affine map `z_k = (ξ_k − center_k) / scale_k` applied to
/// scores before they enter the network.
#[derive(Debug, Clone, PartialEq)]
pub struct InputScaling {
    pub center: Vec<f64>,
    pub scale: Vec<f64>,
}

impl InputScaling {
    /// Sample mean and standard deviation of every score column.
    pub fn fit(scores: &ScoreMatrix) -> Self {
        let n = scores.len() as f64;
        let m = scores.scores();
        let center: Vec<f64> = m.column_iter().map(|c| c.sum() / n).collect();
        let sd: Vec<f64> = m
            .column_iter()
            .zip(&center)
            .map(|(c, mu)| (c.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / n).sqrt())
            .collect();
        let top = sd.iter().copied().fold(0.0, f64::max);
        let floor = SCALE_FLOOR * top;
        Self {
            center,
            scale: sd.into_iter().map(|s| if s > floor { s } else { 1.0 }).collect(),
        }
    }

    /// Identity map on `j` coordinates.
    pub fn identity(j: usize) -> Self {
        Self {
            center: vec![0.0; j],
            scale: vec![1.0; j],
        }
    }

    pub fn len(&self) -> usize {
        self.center.len()
    }

    pub fn is_empty(&self) -> bool {
        self.center.is_empty()
    }

    pub fn truncate(&self, j: usize) -> Self {
        Self {
            center: self.center[..j].to_vec(),
            scale: self.scale[..j].to_vec(),
        }
    }

    pub fn apply(&self, xi: &mut [f64]) {
        for ((x, c), s) in xi.iter_mut().zip(&self.center).zip(&self.scale) {
            *x = (*x - c) / s;
        }
    }

    fn apply_matrix(&self, m: &mut DMatrix<f64>) {
        for (k, mut col) in m.column_iter_mut().enumerate() {
            let (c, s) = (self.center[k], self.scale[k]);
            col.apply(|x| *x = (*x - c) / s);
        }
    }

    fn apply_scores(&self, scores: &ScoreMatrix) -> Result<ScoreMatrix> {
        let mut m = scores.scores().clone();
        self.apply_matrix(&mut m);
        ScoreMatrix::new(m, scores.labels().to_vec())
    }
}

/// A fitted FDNN classifier.
#[derive(Debug, Clone)]
pub struct FdnnModel {
    pub eigensystem: EigenSystem,
    pub hyper: Hyperparams,
    /// Standardization of the leading `J` scores.
    pub scaling: InputScaling,
    pub params: NetworkParams,
    pub selection_report: Vec<SelectionRow>,
}

impl FdnnModel {
    pub fn new(
        eigensystem: EigenSystem,
        hyper: Hyperparams,
        scaling: InputScaling,
        params: NetworkParams,
        selection_report: Vec<SelectionRow>,
    ) -> Result<Self> {
        if params.input_dim() != hyper.j || scaling.len() != hyper.j || hyper.j > eigensystem.len() {
            return Err(FdnnError::invalid(format!(
                "network input dimension {} does not match J = {} (eigensystem has {})",
                params.input_dim(),
                hyper.j,
                eigensystem.len()
            )));
        }
        if scaling.scale.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(FdnnError::invalid("input scales must be positive"));
        }
        Ok(Self {
            eigensystem,
            hyper,
            scaling,
            params,
            selection_report,
        })
    }

    pub fn j(&self) -> usize {
        self.hyper.j
    }

    pub fn grid(&self) -> &Arc<SamplingGrid> {
        self.eigensystem.grid()
    }

    /// Network output `f̂(ξ_J)` for a data function.
    pub fn decision_value(&self, x: &FunctionalObservation) -> Result<f64> {
        let mut xi = self.eigensystem.project(x, self.hyper.j)?;
        self.scaling.apply(&mut xi);
        self.params.forward(&xi)
    }

    pub fn predict(&self, x: &FunctionalObservation) -> Result<Label> {
        predict_fdnn(self, x)
    }

    pub fn predict_all(&self, xs: &[FunctionalObservation]) -> Result<Vec<Label>> {
        if let Some(x) = xs.first() {
            ensure_same_grid(x.grid(), self.grid())?;
        }
        let mut scores = self.eigensystem.project_all(xs, self.hyper.j)?;
        self.scaling.apply_matrix(&mut scores);
        Ok(self.params.forward_rows(&scores)?.into_iter().map(Label::from_sign).collect())
    }
}

/// Label by the sign of the network output; zero maps to `+1`.
pub fn predict_fdnn(model: &FdnnModel, x: &FunctionalObservation) -> Result<Label> {
    Ok(Label::from_sign(model.decision_value(x)?))
}

/// Index sets of a stratified train/validation split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

/// Holds out `round(0.2 n_k)` samples of each class (at least one, and at
/// least one left for training). Both index lists come back sorted.
pub fn stratified_split(labels: &[Label], seed: u64) -> Result<Split> {
    let mut rng = rng::stream(seed, rng::streams::SPLIT);
    let mut train = Vec::new();
    let mut validation = Vec::new();
    for class in [Label::Neg, Label::Pos] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.len() < 2 {
            return Err(FdnnError::InsufficientData(format!(
                "class {class} needs at least 2 samples to split, has {}",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        let hold = ((idx.len() as f64 * VALIDATION_FRACTION).round() as usize).clamp(1, idx.len() - 1);
        validation.extend_from_slice(&idx[..hold]);
        train.extend_from_slice(&idx[hold..]);
    }
    train.sort_unstable();
    validation.sort_unstable();
    Ok(Split { train, validation })
}

/// Validation error of the sign classifier. An output of exactly zero is
/// labelled `+1`, so a network that has collapsed to zero is charged for
/// every negative sample rather than counted as correct.
fn sign_error_rate(params: &NetworkParams, scores: &ScoreMatrix) -> Result<f64> {
    let out = params.forward_rows(scores.scores())?;
    let wrong = out
        .iter()
        .zip(scores.labels())
        .filter(|(f, y)| Label::from_sign(**f) != **y)
        .count();
    Ok(wrong as f64 / scores.len() as f64)
}

fn check_training_set(samples: &[FunctionalObservation]) -> Result<Vec<Label>> {
    if samples.len() < 10 {
        return Err(FdnnError::InsufficientData(format!(
            "at least 10 training samples are required, got {}",
            samples.len()
        )));
    }
    let labels = samples
        .iter()
        .map(|s| s.label().ok_or_else(|| FdnnError::invalid("training samples must be labelled")))
        .collect::<Result<Vec<_>>>()?;
    for class in [Label::Neg, Label::Pos] {
        if !labels.contains(&class) {
            return Err(FdnnError::EmptyClass(class.as_i8()));
        }
    }
    Ok(labels)
}

/// FPCA on all samples, split-sample selection over `hyper`, then a refit
/// of the winning candidate on every sample.
pub fn fit_fdnn(samples: &[FunctionalObservation], hyper: &HyperGrid, cfg: &TrainConfig, split_seed: u64) -> Result<FdnnModel> {
    let labels = check_training_set(samples)?;
    let split = stratified_split(&labels, split_seed)?;
    fit_fdnn_with_split(samples, hyper, cfg, &split)
}

/// As [`fit_fdnn`] with a caller-chosen split.
pub fn fit_fdnn_with_split(samples: &[FunctionalObservation], hyper: &HyperGrid, cfg: &TrainConfig, split: &Split) -> Result<FdnnModel> {
    let labels = check_training_set(samples)?;
    cfg.validate()?;
    let eig = EigenSystem::fit(samples, samples[0].grid().len())?;
    if hyper.max_j() > eig.len() {
        return Err(FdnnError::invalid(format!(
            "grid asks for J = {} but only {} eigenfunctions are available",
            hyper.max_j(),
            eig.len()
        )));
    }
    let raw = ScoreMatrix::new(eig.project_all(samples, hyper.max_j())?, labels)?;
    let scaling = InputScaling::fit(&raw);
    let all = scaling.apply_scores(&raw)?;
    let train_part = all.subset(&split.train);
    let valid_part = all.subset(&split.validation);
    if train_part.is_empty() || valid_part.is_empty() {
        return Err(FdnnError::InsufficientData("split left an empty part".into()));
    }

    let report = hyper
        .candidates()
        .par_iter()
        .map(|h| {
            let arch = h.architecture()?;
            let params = dnn::train(&train_part.truncate(h.j)?, &arch, cfg)?;
            let err = sign_error_rate(&params, &valid_part.truncate(h.j)?)?;
            Ok(SelectionRow {
                hyper: *h,
                validation_error: err,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    // candidates are already in (J, L, width, B) order, so the first minimum wins ties
    let best = report
        .iter()
        .fold(None::<&SelectionRow>, |acc, row| match acc {
            Some(b) if b.validation_error <= row.validation_error => Some(b),
            _ => Some(row),
        })
        .expect("grid is nonempty");
    debug!("selected {:?} with validation error {}", best.hyper, best.validation_error);

    let winner = best.hyper;
    let params = dnn::train(&all.truncate(winner.j)?, &winner.architecture()?, cfg)?;
    FdnnModel::new(eig, winner, scaling.truncate(winner.j), params, report)
}

/// Fraction of positions where `predictions` and `truth` disagree.
pub fn misclassification_rate(predictions: &[Label], truth: &[Label]) -> Result<f64> {
    if predictions.len() != truth.len() {
        return Err(FdnnError::invalid(format!(
            "{} predictions for {} labels",
            predictions.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(FdnnError::invalid("misclassification rate of an empty sample"));
    }
    let wrong = predictions.iter().zip(truth).filter(|(p, t)| p != t).count();
    Ok(wrong as f64 / truth.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_examples() {
        use Label::*;
        assert_eq!(misclassification_rate(&[Pos, Neg], &[Pos, Neg]).unwrap(), 0.0);
        assert_eq!(misclassification_rate(&[Neg, Pos], &[Pos, Neg]).unwrap(), 1.0);
        assert_eq!(misclassification_rate(&[Pos, Pos, Pos, Neg], &[Pos, Pos, Pos, Pos]).unwrap(), 0.25);
        assert!(misclassification_rate(&[Pos], &[Pos, Neg]).is_err());
        assert!(misclassification_rate(&[], &[]).is_err());
    }

    #[test]
    fn default_grid_follows_log_n() {
        let g = HyperGrid::default_for(400);
        let depths: std::collections::BTreeSet<usize> = g.candidates().iter().map(|c| c.depth).collect();
        assert_eq!(depths.into_iter().collect::<Vec<_>>(), vec![5, 6]);
        assert_eq!(g.candidates().len(), 2 * 3 * 4 * 2);
        let g = HyperGrid::default_for(2);
        assert!(g.candidates().iter().all(|c| c.depth == 1));
        assert_eq!(g.candidates().len(), 3 * 4 * 2);
    }

    #[test]
    fn grid_is_sorted_by_simplicity() {
        let g = HyperGrid::product(&[3, 1], &[4, 2], &[16, 8], &[100.0, 10.0]).unwrap();
        let c = g.candidates();
        assert_eq!((c[0].j, c[0].depth, c[0].width, c[0].bound), (2, 1, 8, 10.0));
        assert!(c.windows(2).all(|w| w[0].simplicity_cmp(&w[1]).is_lt()));
        assert!(HyperGrid::new(vec![]).is_err());
    }

    #[test]
    fn split_is_stratified() {
        let labels: Vec<Label> = (0..50).map(|i| if i % 5 == 0 { Label::Neg } else { Label::Pos }).collect();
        let s = stratified_split(&labels, 9).unwrap();
        assert_eq!(s.train.len() + s.validation.len(), 50);
        let neg_valid = s.validation.iter().filter(|&&i| labels[i] == Label::Neg).count();
        assert_eq!(neg_valid, 2);
        assert_eq!(s.validation.len(), 2 + 8);
        assert_eq!(s, stratified_split(&labels, 9).unwrap());
        assert!(stratified_split(&[Label::Pos, Label::Pos, Label::Neg], 0).is_err());
    }
}
