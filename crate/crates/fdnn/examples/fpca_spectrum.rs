//! Pooled FPCA on a 1D and a 2D design: eigenvalues, explained variance and
//! a reconstruction check.
//!
//! cargo run --example fpca_spectrum

use std::sync::Arc;

use fdnn::dgp::{self, DgpSpec};
use fdnn::{inner_product, EigenSystem, FunctionalObservation, SamplingGrid};

fn main() -> fdnn::Result<()> {
    for (id, axes) in [(1, vec![50]), (3, vec![7, 7])] {
        let spec = DgpSpec::by_id(id)?;
        let grid = Arc::new(SamplingGrid::equispaced(spec.dim(), &axes)?);
        let sim = dgp::generate(&spec, 300, &grid, 1)?;
        let eig = EigenSystem::fit(&sim.observations, 8)?;

        let total: f64 = eig.eigenvalues().iter().sum();
        println!("design {id} on {:?}:", grid.points_per_axis());
        let mut cumulative = 0.0;
        for (k, l) in eig.eigenvalues().iter().take(5).enumerate() {
            cumulative += l;
            println!("  λ{} = {l:.4e}  cumulative {:.6}", k + 1, cumulative / total);
        }

        // curves live in a finite-dimensional span, so a few scores rebuild them
        let x = &sim.observations[0];
        let j = spec.n_coefficients();
        let rebuilt = FunctionalObservation::new(grid.clone(), eig.reconstruct(&eig.project(x, j)?), None)?;
        let residual: Vec<f64> = x.values().iter().zip(rebuilt.values()).map(|(a, b)| a - b).collect();
        let residual = FunctionalObservation::new(grid.clone(), residual, None)?;
        println!(
            "  ‖X − X_J‖ / ‖X‖ with J = {j}: {:.2e}",
            (inner_product(&residual, &residual)? / inner_product(x, x)?).sqrt()
        );
    }
    Ok(())
}
