//! Empirical Karhunen–Loève machinery: pooled within-class covariance, the
//! quadrature-weighted eigenproblem, and score projection.
//!
//! The covariance operator `(Cf)(s) = ∫ C(s,s') f(s') ds'` is discretized
//! with the grid weights `W`. Its eigenpairs come from the symmetric matrix
//! `W^{1/2} C W^{1/2}`; eigenvectors are mapped back with `W^{-1/2}` so the
//! returned eigenfunctions are orthonormal under [`SamplingGrid::dot`].

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{FdnnError, Result};
use crate::grid::{ensure_same_grid, FunctionalObservation, SamplingGrid};
use crate::Label;

const SYMMETRY_TOL: f64 = 1e-10;
const NEGATIVE_EIGEN_TOL: f64 = 1e-6;

/// Eigenvalues (nonincreasing, clamped at zero) with grid-sampled
/// eigenfunctions and the pooled sample mean.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    grid: Arc<SamplingGrid>,
    eigenvalues: Vec<f64>,
    eigenfunctions: Vec<Vec<f64>>,
    mean_function: Vec<f64>,
}

impl EigenSystem {
    /// Assembles a system from parts, checking shapes and ordering.
    pub fn from_parts(
        grid: Arc<SamplingGrid>,
        eigenvalues: Vec<f64>,
        eigenfunctions: Vec<Vec<f64>>,
        mean_function: Vec<f64>,
    ) -> Result<Self> {
        let n = grid.len();
        if eigenvalues.len() != eigenfunctions.len() {
            return Err(FdnnError::invalid("eigenvalue and eigenfunction counts differ"));
        }
        if eigenfunctions.iter().any(|f| f.len() != n) || mean_function.len() != n {
            return Err(FdnnError::invalid("eigenfunction length does not match the grid"));
        }
        if eigenvalues.windows(2).any(|w| w[1] > w[0]) || eigenvalues.iter().any(|&l| l < 0.0) {
            return Err(FdnnError::invalid("eigenvalues must be nonnegative and nonincreasing"));
        }
        Ok(Self {
            grid,
            eigenvalues,
            eigenfunctions,
            mean_function,
        })
    }

    /// Pooled covariance plus eigendecomposition on labelled samples,
    /// keeping at most `min(n, N, max_components)` pairs.
    pub fn fit(samples: &[FunctionalObservation], max_components: usize) -> Result<Self> {
        let first = samples
            .first()
            .ok_or_else(|| FdnnError::InsufficientData("no samples".into()))?;
        let grid = first.grid().clone();
        let cov = pooled_covariance(samples)?;
        let keep = max_components.min(samples.len()).min(grid.len());
        let mut eig = eigendecompose(&cov, &grid, keep)?;
        eig.mean_function = pooled_mean(samples);
        Ok(eig)
    }

    pub fn grid(&self) -> &Arc<SamplingGrid> {
        &self.grid
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenfunctions(&self) -> &[Vec<f64>] {
        &self.eigenfunctions
    }

    pub fn mean_function(&self) -> &[f64] {
        &self.mean_function
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Leading `j` uncentered scores `⟨x, ψ̂_k⟩` of a single observation.
    pub fn project(&self, x: &FunctionalObservation, j: usize) -> Result<Vec<f64>> {
        self.check_truncation(j)?;
        ensure_same_grid(x.grid(), &self.grid)?;
        Ok(self.project_values(x.values(), j))
    }

    pub(crate) fn project_values(&self, values: &[f64], j: usize) -> Vec<f64> {
        self.eigenfunctions[..j]
            .iter()
            .map(|psi| self.grid.dot(values, psi))
            .collect()
    }

    /// Scores of many observations as an `n × j` matrix, labels ignored.
    pub fn project_all(&self, samples: &[FunctionalObservation], j: usize) -> Result<DMatrix<f64>> {
        self.check_truncation(j)?;
        let mut out = DMatrix::zeros(samples.len(), j);
        for (i, x) in samples.iter().enumerate() {
            ensure_same_grid(x.grid(), &self.grid)?;
            for (k, v) in self.project_values(x.values(), j).into_iter().enumerate() {
                out[(i, k)] = v;
            }
        }
        Ok(out)
    }

    /// Reconstruction `Σ_{k<j} ξ_k ψ̂_k` on the grid.
    pub fn reconstruct(&self, scores: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        for (xi, psi) in scores.iter().zip(&self.eigenfunctions) {
            for (o, p) in out.iter_mut().zip(psi) {
                *o += xi * p;
            }
        }
        out
    }

    fn check_truncation(&self, j: usize) -> Result<()> {
        if j == 0 || j > self.len() {
            return Err(FdnnError::invalid(format!(
                "truncation level {j} outside 1..={}",
                self.len()
            )));
        }
        Ok(())
    }
}

/// FPCA scores with their labels; row `i` is sample `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    scores: DMatrix<f64>,
    labels: Vec<Label>,
}

impl ScoreMatrix {
    pub fn new(scores: DMatrix<f64>, labels: Vec<Label>) -> Result<Self> {
        if scores.nrows() != labels.len() {
            return Err(FdnnError::invalid(format!(
                "{} score rows but {} labels",
                scores.nrows(),
                labels.len()
            )));
        }
        if scores.ncols() == 0 {
            return Err(FdnnError::invalid("score dimension must be at least 1"));
        }
        Ok(Self { scores, labels })
    }

    /// Builds from per-sample rows.
    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<Label>) -> Result<Self> {
        let j = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != j) {
            return Err(FdnnError::invalid("ragged score rows"));
        }
        let scores = DMatrix::from_fn(rows.len(), j, |i, k| rows[i][k]);
        Self::new(scores, labels)
    }

    pub fn scores(&self) -> &DMatrix<f64> {
        &self.scores
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Truncation level `J`.
    pub fn dim(&self) -> usize {
        self.scores.ncols()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.scores.row(i).iter().copied().collect()
    }

    /// Leading `j` columns.
    pub fn truncate(&self, j: usize) -> Result<Self> {
        if j == 0 || j > self.dim() {
            return Err(FdnnError::invalid(format!("truncation {j} outside 1..={}", self.dim())));
        }
        Ok(Self {
            scores: self.scores.columns(0, j).into_owned(),
            labels: self.labels.clone(),
        })
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            scores: self.scores.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Rows belonging to class `label`.
    pub fn class_rows(&self, label: Label) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.labels[i] == label).collect()
    }
}

/// Pointwise average of the samples carrying `label`.
pub fn class_mean(samples: &[FunctionalObservation], label: Label) -> Result<FunctionalObservation> {
    let members: Vec<&FunctionalObservation> = samples.iter().filter(|s| s.label() == Some(label)).collect();
    let first = members.first().ok_or(FdnnError::EmptyClass(label.as_i8()))?;
    let mut mean = vec![0.0; first.values().len()];
    for s in &members {
        ensure_same_grid(s.grid(), first.grid())?;
        for (m, v) in mean.iter_mut().zip(s.values()) {
            *m += v;
        }
    }
    let k = members.len() as f64;
    mean.iter_mut().for_each(|m| *m /= k);
    FunctionalObservation::new(first.grid().clone(), mean, Some(label))
}

fn pooled_mean(samples: &[FunctionalObservation]) -> Vec<f64> {
    let n = samples[0].values().len();
    let mut mean = vec![0.0; n];
    for s in samples {
        for (m, v) in mean.iter_mut().zip(s.values()) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= samples.len() as f64);
    mean
}

/// Within-class centred covariance pooled over both classes, divided by
/// the total sample count `n`.
pub fn pooled_covariance(samples: &[FunctionalObservation]) -> Result<DMatrix<f64>> {
    let first = samples
        .first()
        .ok_or_else(|| FdnnError::InsufficientData("no samples".into()))?;
    let grid = first.grid();
    if samples.iter().any(|s| s.label().is_none()) {
        return Err(FdnnError::invalid("pooled covariance needs labelled samples"));
    }
    let n_points = grid.len();
    let mut residuals = DMatrix::<f64>::zeros(samples.len(), n_points);
    let mut row = 0;
    for label in [Label::Neg, Label::Pos] {
        let count = samples.iter().filter(|s| s.label() == Some(label)).count();
        if count == 0 {
            continue;
        }
        if count < 2 {
            return Err(FdnnError::InsufficientData(format!(
                "class {label} has {count} sample, at least 2 are required"
            )));
        }
        let mean = class_mean(samples, label)?;
        for s in samples.iter().filter(|s| s.label() == Some(label)) {
            ensure_same_grid(s.grid(), grid)?;
            for (p, (v, m)) in s.values().iter().zip(mean.values()).enumerate() {
                residuals[(row, p)] = v - m;
            }
            row += 1;
        }
    }
    let mut cov = residuals.transpose() * &residuals;
    cov /= samples.len() as f64;
    // gemm can leave last-bit asymmetry; mirror the upper triangle
    for p in 0..n_points {
        for q in 0..p {
            cov[(p, q)] = cov[(q, p)];
        }
    }
    Ok(cov)
}

/// Solves the weighted eigenproblem of `cov` on `grid` and keeps the
/// leading `max_components` pairs.
pub fn eigendecompose(cov: &DMatrix<f64>, grid: &Arc<SamplingGrid>, max_components: usize) -> Result<EigenSystem> {
    let n = grid.len();
    if cov.nrows() != n || cov.ncols() != n {
        return Err(FdnnError::invalid(format!(
            "covariance is {}x{} but the grid has {n} points",
            cov.nrows(),
            cov.ncols()
        )));
    }
    if max_components == 0 || max_components > n {
        return Err(FdnnError::invalid(format!("max_components {max_components} outside 1..={n}")));
    }
    let scale = cov.amax().max(1.0);
    for p in 0..n {
        for q in 0..p {
            if (cov[(p, q)] - cov[(q, p)]).abs() > SYMMETRY_TOL * scale {
                return Err(FdnnError::invalid(format!("covariance is not symmetric at ({p},{q})")));
            }
        }
    }
    let weights = grid.weights();
    if weights.iter().any(|&w| w <= 0.0) {
        return Err(FdnnError::invalid("eigendecomposition needs strictly positive weights"));
    }
    let sqrt_w: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let a = DMatrix::from_fn(n, n, |p, q| {
        // symmetrize from the upper triangle so the solver sees an exactly symmetric matrix
        let c = if p <= q { cov[(p, q)] } else { cov[(q, p)] };
        sqrt_w[p] * c * sqrt_w[q]
    });
    let eig = SymmetricEigen::new(a);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let top = eig.eigenvalues[order[0]].max(0.0);

    let mut eigenvalues = Vec::with_capacity(max_components);
    let mut eigenfunctions = Vec::with_capacity(max_components);
    for &k in order.iter().take(max_components) {
        let lambda = eig.eigenvalues[k];
        if lambda < -NEGATIVE_EIGEN_TOL * top && lambda < -1e-12 {
            return Err(FdnnError::NumericalFailure(format!(
                "covariance has eigenvalue {lambda:e} (leading {top:e})"
            )));
        }
        let mut psi: Vec<f64> = eig
            .eigenvectors
            .column(k)
            .iter()
            .zip(&sqrt_w)
            .map(|(v, s)| v / s)
            .collect();
        orient(&mut psi);
        eigenvalues.push(lambda.max(0.0));
        eigenfunctions.push(psi);
    }
    // clamping can break monotonicity only among values that were already ≤ 0
    for i in 1..eigenvalues.len() {
        if eigenvalues[i] > eigenvalues[i - 1] {
            eigenvalues[i] = eigenvalues[i - 1];
        }
    }
    EigenSystem::from_parts(grid.clone(), eigenvalues, eigenfunctions, vec![0.0; n])
}

/// Flips `v` so its entry of largest magnitude is positive.
fn orient(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Projects labelled samples onto the leading `j` eigenfunctions.
pub fn project_scores(samples: &[FunctionalObservation], eig: &EigenSystem, j: usize) -> Result<ScoreMatrix> {
    let labels = samples
        .iter()
        .map(|s| s.label().ok_or_else(|| FdnnError::invalid("score matrix needs labelled samples")))
        .collect::<Result<Vec<_>>>()?;
    ScoreMatrix::new(eig.project_all(samples, j)?, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid1(m: usize) -> Arc<SamplingGrid> {
        Arc::new(SamplingGrid::equispaced(1, &[m]).unwrap())
    }

    fn lab(grid: &Arc<SamplingGrid>, values: Vec<f64>, label: Label) -> FunctionalObservation {
        FunctionalObservation::new(grid.clone(), values, Some(label)).unwrap()
    }

    #[test]
    fn mean_of_duplicates_and_constants() {
        let g = grid1(5);
        let c = vec![0.1, 0.2, 0.3, 0.4, 0.5];
        let m = class_mean(&[lab(&g, c.clone(), Label::Pos), lab(&g, c.clone(), Label::Pos)], Label::Pos).unwrap();
        assert_eq!(m.values(), &c[..]);
        let m = class_mean(&[lab(&g, vec![0.0; 5], Label::Neg), lab(&g, vec![2.0; 5], Label::Neg)], Label::Neg).unwrap();
        assert!(m.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn empty_class_mean_errors() {
        let g = grid1(3);
        let r = class_mean(&[lab(&g, vec![0.0; 3], Label::Pos)], Label::Neg);
        assert!(matches!(r, Err(FdnnError::EmptyClass(-1))));
    }

    #[test]
    fn identical_within_class_gives_zero_covariance() {
        let g = grid1(4);
        let s = vec![
            lab(&g, vec![1.0, 2.0, 3.0, 4.0], Label::Pos),
            lab(&g, vec![1.0, 2.0, 3.0, 4.0], Label::Pos),
            lab(&g, vec![-1.0, 0.0, 5.0, 4.0], Label::Neg),
            lab(&g, vec![-1.0, 0.0, 5.0, 4.0], Label::Neg),
        ];
        assert_eq!(pooled_covariance(&s).unwrap().amax(), 0.0);
    }

    #[test]
    fn two_sample_covariance_is_outer_product() {
        let g = grid1(3);
        let base = [0.5, -1.0, 2.0];
        let r = [0.3, -0.7, 1.1];
        let plus: Vec<f64> = base.iter().zip(&r).map(|(b, x)| b + x).collect();
        let minus: Vec<f64> = base.iter().zip(&r).map(|(b, x)| b - x).collect();
        let c = pooled_covariance(&[lab(&g, plus, Label::Pos), lab(&g, minus, Label::Pos)]).unwrap();
        for p in 0..3 {
            for q in 0..3 {
                assert!((c[(p, q)] - r[p] * r[q]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn singleton_class_is_insufficient() {
        let g = grid1(3);
        let s = vec![
            lab(&g, vec![1.0; 3], Label::Pos),
            lab(&g, vec![2.0; 3], Label::Pos),
            lab(&g, vec![0.0; 3], Label::Neg),
        ];
        assert!(matches!(pooled_covariance(&s), Err(FdnnError::InsufficientData(_))));
    }

    #[test]
    fn isotropic_operator_trace() {
        let n = 20;
        let g = grid1(n);
        let cov = DMatrix::<f64>::identity(n, n) * n as f64;
        let eig = eigendecompose(&cov, &g, n).unwrap();
        let trace: f64 = (0..n).map(|p| g.weights()[p] * cov[(p, p)]).sum();
        assert!((eig.eigenvalues().iter().sum::<f64>() - trace).abs() < 1e-8);
        assert!(eig.eigenvalues().iter().all(|&l| (l - 1.0).abs() < 1e-10));
    }

    #[test]
    fn rank_one_recovery() {
        let g = grid1(50);
        let phi = g.sample(|s| (3.0 * s[0]).sin() + s[0] * s[0]);
        let cov = DMatrix::from_fn(50, 50, |p, q| phi[p] * phi[q]);
        let eig = eigendecompose(&cov, &g, 5).unwrap();
        let norm = g.dot(&phi, &phi).sqrt();
        let lead = &eig.eigenfunctions()[0];
        let sign = if lead[0] * phi[0] > 0.0 { 1.0 } else { -1.0 };
        for (a, b) in lead.iter().zip(&phi) {
            assert!((a - sign * b / norm).abs() < 1e-8);
        }
        assert!((eig.eigenvalues()[0] - norm * norm).abs() < 1e-10);
        assert!(eig.eigenvalues()[1] <= 1e-10);
    }

    #[test]
    fn sign_convention_largest_entry_positive() {
        let g = grid1(30);
        let phi = g.sample(|s| -(1.0 + s[0]));
        let cov = DMatrix::from_fn(30, 30, |p, q| phi[p] * phi[q]);
        let eig = eigendecompose(&cov, &g, 1).unwrap();
        let lead = &eig.eigenfunctions()[0];
        let big = lead.iter().copied().fold(0.0f64, |a, b| if b.abs() > a.abs() { b } else { a });
        assert!(big > 0.0);
    }

    #[test]
    fn asymmetric_covariance_rejected() {
        let g = grid1(3);
        let mut cov = DMatrix::<f64>::identity(3, 3);
        cov[(0, 1)] = 0.5;
        assert!(matches!(eigendecompose(&cov, &g, 2), Err(FdnnError::InvalidArgument(_))));
    }

    #[test]
    fn strongly_negative_eigenvalue_is_a_failure() {
        let g = grid1(2);
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(eigendecompose(&cov, &g, 2), Err(FdnnError::NumericalFailure(_))));
    }

    #[test]
    fn max_components_bounds() {
        let g = grid1(3);
        let cov = DMatrix::<f64>::identity(3, 3);
        assert!(eigendecompose(&cov, &g, 0).is_err());
        assert!(eigendecompose(&cov, &g, 4).is_err());
    }

    #[test]
    fn eigenfunction_scores_are_unit_vectors() {
        let g = grid1(40);
        let f1 = g.sample(|s| 1.0 + s[0]);
        let f2 = g.sample(|s| (6.0 * s[0]).cos());
        let cov = DMatrix::from_fn(40, 40, |p, q| 3.0 * f1[p] * f1[q] + f2[p] * f2[q]);
        let eig = eigendecompose(&cov, &g, 4).unwrap();
        let psi1 = eig.eigenfunctions()[0].clone();
        let psi2 = eig.eigenfunctions()[1].clone();
        let x = FunctionalObservation::new(g.clone(), psi1.clone(), None).unwrap();
        let s = eig.project(&x, 4).unwrap();
        assert!((s[0] - 1.0).abs() < 1e-8 && s[1..].iter().all(|v| v.abs() < 1e-8));
        let combo: Vec<f64> = psi1.iter().zip(&psi2).map(|(a, b)| 2.0 * a - 3.0 * b).collect();
        let x = FunctionalObservation::new(g.clone(), combo, None).unwrap();
        let s = eig.project(&x, 3).unwrap();
        assert!((s[0] - 2.0).abs() < 1e-8 && (s[1] + 3.0).abs() < 1e-8 && s[2].abs() < 1e-8);
        assert!(eig.project(&x, 0).is_err());
        assert!(eig.project(&x, 5).is_err());
    }

    #[test]
    fn score_matrix_shape_checks() {
        assert!(ScoreMatrix::new(DMatrix::zeros(2, 1), vec![Label::Pos]).is_err());
        assert!(ScoreMatrix::new(DMatrix::zeros(1, 0), vec![Label::Pos]).is_err());
        let m = ScoreMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]], vec![Label::Pos, Label::Neg]).unwrap();
        assert_eq!(m.truncate(1).unwrap().scores().as_slice(), &[1.0, 3.0]);
        assert_eq!(m.subset(&[1]).row(0), vec![3.0, 4.0]);
    }
}
