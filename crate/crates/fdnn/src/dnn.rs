//! Sup-norm bounded ReLU networks and hinge-loss training.
//!
//! A network with `L` hidden layers computes
//!
//! ```text
//! f(x) = W_L σ_{V_L}( W_{L-1} … σ_{V_1}( W_0 x ) )
//! ```
//!
//! where `σ_V(y)_i = max(y_i - v_i, 0)`. There is no shift or activation on
//! the output layer. Membership in the class requires every entry of every
//! `W_l` and `V_l` to have magnitude at most `B`; training enforces it by
//! clipping after each step, which is the Euclidean projection onto that box.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::error::{FdnnError, Result};
use crate::fpca::ScoreMatrix;
use crate::rng;

/// Depth, widths, input dimension and sup-norm bound of a network class.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkArchitecture {
    pub input_dim: usize,
    pub widths: Vec<usize>,
    pub bound: f64,
}

impl NetworkArchitecture {
    pub fn new(input_dim: usize, widths: Vec<usize>, bound: f64) -> Result<Self> {
        let arch = Self {
            input_dim,
            widths,
            bound,
        };
        arch.validate()?;
        Ok(arch)
    }

    /// `depth` hidden layers of equal `width`.
    pub fn uniform(input_dim: usize, depth: usize, width: usize, bound: f64) -> Result<Self> {
        Self::new(input_dim, vec![width; depth], bound)
    }

    pub fn depth(&self) -> usize {
        self.widths.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(FdnnError::invalid("network input dimension must be at least 1"));
        }
        if self.widths.is_empty() {
            return Err(FdnnError::invalid("network needs at least one hidden layer"));
        }
        if self.widths.contains(&0) {
            return Err(FdnnError::invalid("hidden layer widths must be positive"));
        }
        if !(self.bound.is_finite() && self.bound > 0.0) {
            return Err(FdnnError::invalid(format!("bound must be finite and positive, got {}", self.bound)));
        }
        Ok(())
    }

    /// Layer sizes `p_0 = J, p_1, …, p_L, p_{L+1} = 1`.
    fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = Vec::with_capacity(self.widths.len() + 2);
        sizes.push(self.input_dim);
        sizes.extend(&self.widths);
        sizes.push(1);
        sizes
    }
}

/// Weight matrices `W_0..W_L` and shift vectors `V_1..V_L`.
///
/// `shifts[l]` is `V_{l+1}`, applied after `weights[l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub weights: Vec<DMatrix<f64>>,
    pub shifts: Vec<DVector<f64>>,
}

impl NetworkParams {
    /// Validates that shapes chain as `p_{l+1} × p_l`.
    pub fn new(weights: Vec<DMatrix<f64>>, shifts: Vec<DVector<f64>>) -> Result<Self> {
        if weights.len() < 2 || shifts.len() + 1 != weights.len() {
            return Err(FdnnError::invalid(format!(
                "{} weight matrices need {} shift vectors, got {}",
                weights.len(),
                weights.len().saturating_sub(1),
                shifts.len()
            )));
        }
        for (l, w) in weights.iter().enumerate() {
            if l > 0 && w.ncols() != weights[l - 1].nrows() {
                return Err(FdnnError::invalid(format!("W_{l} has {} columns, expected {}", w.ncols(), weights[l - 1].nrows())));
            }
            if l < shifts.len() && shifts[l].len() != w.nrows() {
                return Err(FdnnError::invalid(format!("V_{} has length {}, expected {}", l + 1, shifts[l].len(), w.nrows())));
            }
        }
        if weights.last().map(|w| w.nrows()) != Some(1) {
            return Err(FdnnError::invalid("output layer must have a single row"));
        }
        Ok(Self { weights, shifts })
    }

    /// All-zero parameters for `arch`.
    pub fn zeros(arch: &NetworkArchitecture) -> Self {
        let sizes = arch.layer_sizes();
        Self {
            weights: sizes.windows(2).map(|w| DMatrix::zeros(w[1], w[0])).collect(),
            shifts: arch.widths.iter().map(|&p| DVector::zeros(p)).collect(),
        }
    }

    /// Uniform initialization on `[-s, s]` with
    /// `s = min(B, sqrt(6 / (fan_in + fan_out)))`; shifts start at zero.
    ///
    /// Each layer draws from its own stream in column-major order, so two
    /// architectures that differ only in input dimension share the leading
    /// columns of `W_0` (up to scale) and every later layer.
    pub fn init(arch: &NetworkArchitecture, seed: u64) -> Self {
        let mut params = Self::zeros(arch);
        for (l, w) in params.weights.iter_mut().enumerate() {
            let mut rng = rng::stream(seed, rng::streams::INIT + l as u64);
            let scale = (6.0 / (w.nrows() + w.ncols()) as f64).sqrt().min(arch.bound);
            for v in w.iter_mut() {
                *v = scale * rng.random_range(-1.0..=1.0);
            }
        }
        params
    }

    pub fn input_dim(&self) -> usize {
        self.weights[0].ncols()
    }

    pub fn depth(&self) -> usize {
        self.shifts.len()
    }

    pub fn widths(&self) -> Vec<usize> {
        self.shifts.iter().map(|v| v.len()).collect()
    }

    /// Largest absolute entry over every weight and shift.
    pub fn max_abs(&self) -> f64 {
        self.weights
            .iter()
            .map(|w| w.amax())
            .chain(self.shifts.iter().map(|v| v.amax()))
            .fold(0.0, f64::max)
    }

    /// Projection onto the box `[-bound, bound]`.
    pub fn clip(&mut self, bound: f64) {
        for w in &mut self.weights {
            w.apply(|v| *v = v.clamp(-bound, bound));
        }
        for s in &mut self.shifts {
            s.apply(|v| *v = v.clamp(-bound, bound));
        }
    }

    fn axpy(&mut self, alpha: f64, other: &NetworkParams) {
        for (w, g) in self.weights.iter_mut().zip(&other.weights) {
            w.zip_apply(g, |a, b| *a += alpha * b);
        }
        for (v, g) in self.shifts.iter_mut().zip(&other.shifts) {
            v.zip_apply(g, |a, b| *a += alpha * b);
        }
    }

    /// Scalar output for one input vector.
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.input_dim() {
            return Err(FdnnError::invalid(format!(
                "input has length {}, network expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        let mut a = DVector::from_column_slice(x);
        let last = self.weights.len() - 1;
        for (w, v) in self.weights[..last].iter().zip(&self.shifts) {
            a = w * a;
            a.zip_apply(v, |h, s| *h = (*h - s).max(0.0));
        }
        Ok((&self.weights[last] * a)[0])
    }

    /// Outputs for every row of `scores` (an `n × J` matrix).
    pub fn forward_rows(&self, scores: &DMatrix<f64>) -> Result<Vec<f64>> {
        if scores.ncols() != self.input_dim() {
            return Err(FdnnError::invalid(format!(
                "scores have {} columns, network expects {}",
                scores.ncols(),
                self.input_dim()
            )));
        }
        let out = self.forward_batch(&scores.transpose());
        Ok(out.iter().copied().collect())
    }

    /// Column-batched forward pass on a `J × b` input.
    fn forward_batch(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let last = self.weights.len() - 1;
        let mut a = x.clone();
        for (w, v) in self.weights[..last].iter().zip(&self.shifts) {
            a = w * a;
            shift_relu(&mut a, v);
        }
        &self.weights[last] * a
    }
}

fn shift_relu(h: &mut DMatrix<f64>, v: &DVector<f64>) {
    for mut col in h.column_iter_mut() {
        col.zip_apply(v, |x, s| *x = (*x - s).max(0.0));
    }
}

/// Hinge loss `max(1 - m, 0)`.
pub fn hinge(margin: f64) -> f64 {
    (1.0 - margin).max(0.0)
}

/// Empirical hinge risk `(1/n) Σ φ(f(ξ_i) Y_i)`.
pub fn hinge_risk(params: &NetworkParams, scores: &ScoreMatrix) -> Result<f64> {
    if scores.is_empty() {
        return Err(FdnnError::invalid("hinge risk of an empty sample"));
    }
    let out = params.forward_rows(scores.scores())?;
    let total: f64 = out
        .iter()
        .zip(scores.labels())
        .map(|(f, y)| hinge(f * y.as_f64()))
        .sum();
    Ok(total / scores.len() as f64)
}

/// Subgradient of the batch-average hinge risk over the rows `batch`.
///
/// Kink conventions: the hinge derivative is `-1` for margins strictly below
/// one and `0` otherwise; the ReLU derivative is `0` at zero.
pub fn subgradient(params: &NetworkParams, scores: &ScoreMatrix, batch: &[usize]) -> Result<NetworkParams> {
    if batch.is_empty() {
        return Err(FdnnError::invalid("subgradient of an empty batch"));
    }
    if scores.dim() != params.input_dim() {
        return Err(FdnnError::invalid(format!(
            "scores have dimension {}, network expects {}",
            scores.dim(),
            params.input_dim()
        )));
    }
    if let Some(&bad) = batch.iter().find(|&&i| i >= scores.len()) {
        return Err(FdnnError::invalid(format!("batch index {bad} out of range")));
    }
    let x = DMatrix::from_fn(scores.dim(), batch.len(), |k, b| scores.scores()[(batch[b], k)]);
    let y: Vec<f64> = batch.iter().map(|&i| scores.labels()[i].as_f64()).collect();
    Ok(backprop(params, &x, &y))
}

fn backprop(params: &NetworkParams, x: &DMatrix<f64>, y: &[f64]) -> NetworkParams {
    let last = params.weights.len() - 1;
    let b = x.ncols();
    // activations[l] is the input to weights[l]
    let mut activations = Vec::with_capacity(last + 1);
    activations.push(x.clone());
    for (w, v) in params.weights[..last].iter().zip(&params.shifts) {
        let mut h = w * activations.last().unwrap();
        shift_relu(&mut h, v);
        activations.push(h);
    }
    let out = &params.weights[last] * &activations[last];

    let mut delta = DMatrix::from_fn(1, b, |_, i| {
        if out[(0, i)] * y[i] < 1.0 {
            -y[i] / b as f64
        } else {
            0.0
        }
    });

    let mut grad = NetworkParams {
        weights: Vec::with_capacity(last + 1),
        shifts: Vec::with_capacity(last),
    };
    let mut weight_grads = vec![DMatrix::zeros(0, 0); last + 1];
    let mut shift_grads = vec![DVector::zeros(0); last];
    for l in (0..=last).rev() {
        weight_grads[l] = &delta * activations[l].transpose();
        if l == 0 {
            break;
        }
        let mut back = params.weights[l].transpose() * &delta;
        // a = σ(h) with a > 0 exactly where the ReLU is active
        back.zip_apply(&activations[l], |d, a| {
            if a <= 0.0 {
                *d = 0.0;
            }
        });
        shift_grads[l - 1] = -back.column_sum();
        delta = back;
    }
    grad.weights = weight_grads;
    grad.shifts = shift_grads;
    grad
}

/// Optimizer settings for projected mini-batch subgradient descent.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Multiplicative learning-rate decay applied after every epoch.
    pub decay: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            decay: 0.98,
            epochs: 120,
            batch_size: 16,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(FdnnError::invalid("learning rate must be positive"));
        }
        if !(self.decay.is_finite() && self.decay > 0.0) {
            return Err(FdnnError::invalid("decay factor must be positive"));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(FdnnError::invalid("epochs and batch size must be positive"));
        }
        Ok(())
    }
}

/// Outcome of a training run with the per-epoch full-sample hinge risk.
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub params: NetworkParams,
    pub initial_risk: f64,
    /// Full-sample hinge risk after each epoch.
    pub epoch_risks: Vec<f64>,
    pub final_risk: f64,
}

/// Approximate hinge-risk minimizer over the bounded network class.
pub fn train(scores: &ScoreMatrix, arch: &NetworkArchitecture, cfg: &TrainConfig) -> Result<NetworkParams> {
    Ok(train_with_report(scores, arch, cfg)?.params)
}

/// Projected mini-batch subgradient descent with geometric step decay.
///
/// Returns the iterate with the lowest full-sample hinge risk seen at an
/// epoch boundary (the initial point included), so the final risk never
/// exceeds the initial one.
pub fn train_with_report(scores: &ScoreMatrix, arch: &NetworkArchitecture, cfg: &TrainConfig) -> Result<TrainReport> {
    arch.validate()?;
    cfg.validate()?;
    if scores.dim() != arch.input_dim {
        return Err(FdnnError::invalid(format!(
            "scores have dimension {}, architecture expects {}",
            scores.dim(),
            arch.input_dim
        )));
    }
    if scores.is_empty() {
        return Err(FdnnError::invalid("cannot train on an empty sample"));
    }
    let n = scores.len();
    let xt = scores.scores().transpose();
    let y: Vec<f64> = scores.labels().iter().map(|l| l.as_f64()).collect();
    let full_risk = |p: &NetworkParams| -> f64 {
        let out = p.forward_batch(&xt);
        out.iter().zip(&y).map(|(f, y)| hinge(f * y)).sum::<f64>() / n as f64
    };

    let mut params = NetworkParams::init(arch, cfg.seed);
    params.clip(arch.bound);
    let mut rng = rng::stream(cfg.seed, rng::streams::NETWORK);
    let initial_risk = full_risk(&params);
    let mut best = (initial_risk, params.clone());
    let mut epoch_risks = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..n).collect();
    let mut lr = cfg.learning_rate;
    let batch_size = cfg.batch_size.min(n);

    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch_size) {
            let x = xt.select_columns(chunk);
            let yb: Vec<f64> = chunk.iter().map(|&i| y[i]).collect();
            let g = backprop(&params, &x, &yb);
            params.axpy(-lr, &g);
            params.clip(arch.bound);
        }
        lr *= cfg.decay;
        let risk = full_risk(&params);
        if !risk.is_finite() {
            return Err(FdnnError::NumericalFailure("training diverged".into()));
        }
        epoch_risks.push(risk);
        if risk < best.0 {
            best = (risk, params.clone());
        }
    }
    Ok(TrainReport {
        params: best.1,
        initial_risk,
        epoch_risks,
        final_risk: best.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Label;

    fn net(w0: &[f64], j: usize, v1: &[f64], w1: &[f64]) -> NetworkParams {
        let p = v1.len();
        NetworkParams::new(
            vec![DMatrix::from_row_slice(p, j, w0), DMatrix::from_row_slice(1, p, w1)],
            vec![DVector::from_column_slice(v1)],
        )
        .unwrap()
    }

    #[test]
    fn forward_hand_examples() {
        let id = net(&[1.0], 1, &[0.0], &[1.0]);
        assert_eq!(id.forward(&[3.0]).unwrap(), 3.0);
        assert_eq!(id.forward(&[-3.0]).unwrap(), 0.0);
        let two = net(&[1.0, 1.0, 1.0, -1.0], 2, &[0.5, 0.0], &[2.0, -1.0]);
        assert_eq!(two.forward(&[1.0, 2.0]).unwrap(), 5.0);
        assert!(two.forward(&[1.0]).is_err());
    }

    #[test]
    fn shape_validation() {
        assert!(NetworkParams::new(
            vec![DMatrix::zeros(2, 1), DMatrix::zeros(1, 3)],
            vec![DVector::zeros(2)]
        )
        .is_err());
        assert!(NetworkParams::new(vec![DMatrix::zeros(2, 1), DMatrix::zeros(1, 2)], vec![]).is_err());
        assert!(NetworkParams::new(
            vec![DMatrix::zeros(2, 1), DMatrix::zeros(2, 2)],
            vec![DVector::zeros(2)]
        )
        .is_err());
    }

    #[test]
    fn hinge_risk_cases() {
        let scores = ScoreMatrix::from_rows(&[vec![1.0], vec![-2.0]], vec![Label::Pos, Label::Neg]).unwrap();
        let zero = net(&[1.0], 1, &[0.0], &[0.0]);
        assert_eq!(hinge_risk(&zero, &scores).unwrap(), 1.0);
        // f(x) = 5 σ(x) - ... use two units: f(x) = 5σ(x) - 5σ(-x)
        let big = net(&[1.0, -1.0], 1, &[0.0, 0.0], &[5.0, -5.0]);
        assert_eq!(hinge_risk(&big, &scores).unwrap(), 0.0);
        let one = ScoreMatrix::from_rows(&[vec![0.3]], vec![Label::Pos]).unwrap();
        let id = net(&[1.0], 1, &[0.0], &[1.0]);
        assert!((hinge_risk(&id, &one).unwrap() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn flat_region_has_zero_gradient() {
        let scores = ScoreMatrix::from_rows(&[vec![2.0], vec![-3.0]], vec![Label::Pos, Label::Neg]).unwrap();
        let big = net(&[1.0, -1.0], 1, &[0.0, 0.0], &[5.0, -5.0]);
        let g = subgradient(&big, &scores, &[0, 1]).unwrap();
        assert_eq!(g.max_abs(), 0.0);
    }

    #[test]
    fn linear_unit_derivative() {
        // f(x) = 1·σ(w x) = w x for x, w > 0
        let scores = ScoreMatrix::from_rows(&[vec![2.0]], vec![Label::Pos]).unwrap();
        let p = net(&[0.1], 1, &[0.0], &[1.0]);
        let g = subgradient(&p, &scores, &[0]).unwrap();
        assert!((g.weights[0][(0, 0)] + 2.0).abs() < 1e-15);
    }

    #[test]
    fn empty_batch_errors() {
        let scores = ScoreMatrix::from_rows(&[vec![2.0]], vec![Label::Pos]).unwrap();
        let p = net(&[0.1], 1, &[0.0], &[1.0]);
        assert!(subgradient(&p, &scores, &[]).is_err());
    }

    #[test]
    fn tiny_bound_collapses_network() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![if i % 2 == 0 { 3.0 } else { -3.0 }, 1.0]).collect();
        let labels = (0..20).map(|i| if i % 2 == 0 { Label::Pos } else { Label::Neg }).collect();
        let scores = ScoreMatrix::from_rows(&rows, labels).unwrap();
        let arch = NetworkArchitecture::uniform(2, 2, 4, 1e-9).unwrap();
        let p = train(&scores, &arch, &TrainConfig::default()).unwrap();
        assert!(p.max_abs() <= 1e-9);
        assert!((hinge_risk(&p, &scores).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn invalid_configs() {
        assert!(NetworkArchitecture::uniform(0, 1, 1, 1.0).is_err());
        assert!(NetworkArchitecture::uniform(1, 0, 1, 1.0).is_err());
        assert!(NetworkArchitecture::uniform(1, 1, 0, 1.0).is_err());
        assert!(NetworkArchitecture::uniform(1, 1, 1, f64::INFINITY).is_err());
        let cfg = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        let scores = ScoreMatrix::from_rows(&[vec![2.0]], vec![Label::Pos]).unwrap();
        let arch = NetworkArchitecture::uniform(1, 1, 1, 1.0).unwrap();
        assert!(train(&scores, &arch, &cfg).is_err());
        let arch2 = NetworkArchitecture::uniform(2, 1, 1, 1.0).unwrap();
        assert!(train(&scores, &arch2, &TrainConfig::default()).is_err());
    }
}
