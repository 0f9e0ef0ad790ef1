//! Tensor-product sampling grids on `[0,1]^d` and the quadrature inner
//! product used by every FPCA computation.
//!
//! Values of a function on a grid are flattened row-major: the last axis
//! varies fastest. For `d = 2` with axes `(m1, m2)` the value at
//! `(s1[i], s2[j])` lives at index `i * m2 + j`.

pub mod csv;

use std::sync::Arc;

use crate::error::{FdnnError, Result};
use crate::Label;

const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Evaluation points on `[0,1]^d` with one quadrature weight per point.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingGrid {
    points_per_axis: Vec<usize>,
    coordinates: Vec<Vec<f64>>,
    weights: Vec<f64>,
    equispaced: bool,
}

impl SamplingGrid {
    /// Midpoint-rule grid: point `i` of an `m`-point axis sits at
    /// `(i + 0.5) / m` and carries weight `1/m`. Tensor weights multiply.
    pub fn equispaced(dim: usize, points_per_axis: &[usize]) -> Result<Self> {
        if dim == 0 {
            return Err(FdnnError::invalid("grid dimension must be at least 1"));
        }
        if points_per_axis.len() != dim {
            return Err(FdnnError::invalid(format!(
                "expected {dim} axis counts, got {}",
                points_per_axis.len()
            )));
        }
        if let Some(&m) = points_per_axis.iter().find(|&&m| m < 2) {
            return Err(FdnnError::invalid(format!(
                "each axis needs at least 2 points, got {m}"
            )));
        }
        let coordinates: Vec<Vec<f64>> = points_per_axis
            .iter()
            .map(|&m| (0..m).map(|i| (i as f64 + 0.5) / m as f64).collect())
            .collect();
        let axis_weights: Vec<Vec<f64>> = points_per_axis
            .iter()
            .map(|&m| vec![1.0 / m as f64; m])
            .collect();
        let mut grid = Self::from_axis_weights(coordinates, &axis_weights)?;
        grid.equispaced = true;
        Ok(grid)
    }

    /// Trapezoidal weights on arbitrary strictly increasing axis points.
    ///
    /// The end cells are extended to the domain boundary with constant
    /// extrapolation so the weights of every axis sum to one.
    pub fn trapezoidal(coordinates: Vec<Vec<f64>>) -> Result<Self> {
        let axis_weights: Vec<Vec<f64>> = coordinates
            .iter()
            .map(|axis| trapezoid_axis_weights(axis))
            .collect::<Result<_>>()?;
        Self::from_axis_weights(coordinates, &axis_weights)
    }

    /// Grid with caller-supplied per-point weights (flattened row-major).
    pub fn with_weights(coordinates: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        validate_axes(&coordinates)?;
        let n: usize = coordinates.iter().map(Vec::len).product();
        if weights.len() != n {
            return Err(FdnnError::invalid(format!(
                "expected {n} weights, got {}",
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(FdnnError::invalid("weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(FdnnError::invalid(format!(
                "weights must sum to 1, got {total}"
            )));
        }
        Ok(Self {
            points_per_axis: coordinates.iter().map(Vec::len).collect(),
            coordinates,
            weights,
            equispaced: false,
        })
    }

    fn from_axis_weights(coordinates: Vec<Vec<f64>>, axis_weights: &[Vec<f64>]) -> Result<Self> {
        validate_axes(&coordinates)?;
        let mut weights = vec![1.0];
        for axis in axis_weights {
            weights = weights
                .iter()
                .flat_map(|w| axis.iter().map(move |a| w * a))
                .collect();
        }
        Ok(Self {
            points_per_axis: coordinates.iter().map(Vec::len).collect(),
            coordinates,
            weights,
            equispaced: false,
        })
    }

    pub fn dim(&self) -> usize {
        self.points_per_axis.len()
    }

    pub fn points_per_axis(&self) -> &[usize] {
        &self.points_per_axis
    }

    pub fn coordinates(&self) -> &[Vec<f64>] {
        &self.coordinates
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Total number of grid points `N`.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Whether the grid was built by [`SamplingGrid::equispaced`].
    pub fn is_equispaced(&self) -> bool {
        self.equispaced
    }

    /// Coordinates of the flattened point `index`.
    pub fn point(&self, index: usize) -> Vec<f64> {
        let mut rem = index;
        let mut out = vec![0.0; self.dim()];
        for (axis, &m) in self.points_per_axis.iter().enumerate().rev() {
            out[axis] = self.coordinates[axis][rem % m];
            rem /= m;
        }
        out
    }

    /// Iterator over the coordinates of every grid point in storage order.
    pub fn points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(|p| self.point(p))
    }

    /// Samples `f` at every grid point.
    pub fn sample<F: Fn(&[f64]) -> f64>(&self, f: F) -> Vec<f64> {
        self.points().map(|s| f(&s)).collect()
    }

    /// Quadrature approximation of `∫ a b` for raw value slices.
    pub fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        weighted_dot(&self.weights, a, b)
    }
}

fn validate_axes(coordinates: &[Vec<f64>]) -> Result<()> {
    if coordinates.is_empty() {
        return Err(FdnnError::invalid("grid dimension must be at least 1"));
    }
    for axis in coordinates {
        if axis.is_empty() {
            return Err(FdnnError::invalid("axis with no points"));
        }
        if axis.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(FdnnError::invalid("axis points must lie in [0,1]"));
        }
        if axis.windows(2).any(|w| w[1] <= w[0]) {
            return Err(FdnnError::invalid("axis points must be strictly increasing"));
        }
    }
    Ok(())
}

fn trapezoid_axis_weights(axis: &[f64]) -> Result<Vec<f64>> {
    if axis.len() < 2 {
        return Err(FdnnError::invalid("each axis needs at least 2 points"));
    }
    let m = axis.len();
    let mut w = vec![0.0; m];
    for i in 0..m - 1 {
        let h = axis[i + 1] - axis[i];
        w[i] += 0.5 * h;
        w[i + 1] += 0.5 * h;
    }
    w[0] += axis[0];
    w[m - 1] += 1.0 - axis[m - 1];
    Ok(w)
}

/// `Σ_p w[p] a[p] b[p]`.
pub fn weighted_dot(weights: &[f64], a: &[f64], b: &[f64]) -> f64 {
    weights
        .iter()
        .zip(a)
        .zip(b)
        .map(|((w, x), y)| w * x * y)
        .sum()
}

/// A data function sampled on a grid, optionally labelled.
#[derive(Debug, Clone)]
pub struct FunctionalObservation {
    grid: Arc<SamplingGrid>,
    values: Vec<f64>,
    label: Option<Label>,
}

impl FunctionalObservation {
    pub fn new(grid: Arc<SamplingGrid>, values: Vec<f64>, label: Option<Label>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(FdnnError::invalid(format!(
                "observation has {} values but the grid has {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self {
            grid,
            values,
            label,
        })
    }

    pub fn grid(&self) -> &Arc<SamplingGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn label(&self) -> Option<Label> {
        self.label
    }

    pub fn with_label(mut self, label: Option<Label>) -> Self {
        self.label = label;
        self
    }

    pub fn same_grid(&self, other: &SamplingGrid) -> bool {
        same_grid(&self.grid, other)
    }
}

pub(crate) fn same_grid(a: &SamplingGrid, b: &SamplingGrid) -> bool {
    std::ptr::eq(a, b) || a == b
}

pub(crate) fn ensure_same_grid(a: &SamplingGrid, b: &SamplingGrid) -> Result<()> {
    if same_grid(a, b) {
        Ok(())
    } else {
        Err(FdnnError::IncompatibleGrids(format!(
            "axes {:?} vs {:?}",
            a.points_per_axis(),
            b.points_per_axis()
        )))
    }
}

/// Quadrature inner product `Σ_p w[p] f(s_p) g(s_p) ≈ ∫_S f g`.
pub fn inner_product(f: &FunctionalObservation, g: &FunctionalObservation) -> Result<f64> {
    ensure_same_grid(&f.grid, &g.grid)?;
    Ok(f.grid.dot(&f.values, &g.values))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(grid: &Arc<SamplingGrid>, f: impl Fn(&[f64]) -> f64) -> FunctionalObservation {
        FunctionalObservation::new(grid.clone(), grid.sample(f), None).unwrap()
    }

    #[test]
    fn two_point_midpoint_axis() {
        let g = SamplingGrid::equispaced(1, &[2]).unwrap();
        assert_eq!(g.coordinates()[0], vec![0.25, 0.75]);
        assert_eq!(g.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn tensor_of_halves() {
        let g = SamplingGrid::equispaced(2, &[2, 2]).unwrap();
        assert_eq!(g.len(), 4);
        assert!(g.weights().iter().all(|&w| w == 0.25));
        assert_eq!(g.point(1), vec![0.25, 0.75]);
        assert_eq!(g.point(2), vec![0.75, 0.25]);
    }

    #[test]
    fn fifty_point_weights() {
        let g = SamplingGrid::equispaced(1, &[50]).unwrap();
        assert_eq!(g.len(), 50);
        assert!(g.weights().iter().all(|&w| (w - 0.02).abs() < 1e-15));
        assert!((g.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_axis_counts() {
        assert!(matches!(
            SamplingGrid::equispaced(1, &[0]),
            Err(FdnnError::InvalidArgument(_))
        ));
        assert!(SamplingGrid::equispaced(1, &[1]).is_err());
        assert!(SamplingGrid::equispaced(0, &[]).is_err());
        assert!(SamplingGrid::equispaced(2, &[3]).is_err());
    }

    #[test]
    fn constant_one_has_unit_norm() {
        for axes in [vec![7], vec![50], vec![3, 5]] {
            let g = Arc::new(SamplingGrid::equispaced(axes.len(), &axes).unwrap());
            let one = obs(&g, |_| 1.0);
            assert!((inner_product(&one, &one).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn polynomial_integrals_on_fifty_points() {
        let g = Arc::new(SamplingGrid::equispaced(1, &[50]).unwrap());
        let s = obs(&g, |x| x[0]);
        let one_minus = obs(&g, |x| 1.0 - x[0]);
        assert!((inner_product(&s, &s).unwrap() - 1.0 / 3.0).abs() < 5e-4);
        assert!((inner_product(&s, &one_minus).unwrap() - 1.0 / 6.0).abs() < 5e-4);
    }

    #[test]
    fn midpoint_error_is_second_order() {
        let err = |m: usize| {
            let g = SamplingGrid::equispaced(1, &[m]).unwrap();
            let v = g.sample(|x| x[0].powi(3) - 0.5 * x[0] * x[0] + 2.0);
            let exact = 0.25 - 0.5 / 3.0 + 2.0;
            (g.dot(&v, &vec![1.0; m]) - exact).abs()
        };
        assert!(err(100) <= err(50) / 3.9);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = Arc::new(SamplingGrid::equispaced(1, &[10]).unwrap());
        let b = Arc::new(SamplingGrid::equispaced(1, &[11]).unwrap());
        let f = obs(&a, |_| 1.0);
        let g = obs(&b, |_| 1.0);
        assert!(matches!(
            inner_product(&f, &g),
            Err(FdnnError::IncompatibleGrids(_))
        ));
    }

    #[test]
    fn equal_grids_built_separately_are_compatible() {
        let a = Arc::new(SamplingGrid::equispaced(1, &[10]).unwrap());
        let b = Arc::new(SamplingGrid::equispaced(1, &[10]).unwrap());
        assert!(inner_product(&obs(&a, |_| 1.0), &obs(&b, |_| 1.0)).is_ok());
    }

    #[test]
    fn trapezoid_weights_sum_to_one() {
        let g = SamplingGrid::trapezoidal(vec![vec![0.0, 0.1, 0.5, 0.9]]).unwrap();
        assert!((g.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let v = g.sample(|x| x[0]);
        // constant extrapolation at the right edge: exact for linear f on [0, 0.9]
        let expected = 0.9 * 0.9 / 2.0 + 0.1 * 0.9;
        assert!((g.dot(&v, &[1.0; 4]) - expected).abs() < 1e-12);
    }

    #[test]
    fn with_weights_validates_total() {
        assert!(SamplingGrid::with_weights(vec![vec![0.2, 0.8]], vec![0.5, 0.4]).is_err());
        assert!(SamplingGrid::with_weights(vec![vec![0.2, 0.8]], vec![0.5, 0.5]).is_ok());
        assert!(SamplingGrid::with_weights(vec![vec![0.8, 0.2]], vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn observation_length_must_match_grid() {
        let g = Arc::new(SamplingGrid::equispaced(1, &[4]).unwrap());
        assert!(FunctionalObservation::new(g, vec![0.0; 3], None).is_err());
    }
}
