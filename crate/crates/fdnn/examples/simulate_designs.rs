//! Draws a small sample from every built-in design and writes it to CSV.
//!
//! cargo run --example simulate_designs

use std::sync::Arc;

use fdnn::bench::default_grid;
use fdnn::dgp::{self, DgpSpec};
use fdnn::grid::csv::{load_csv, save_csv};
use fdnn::{Label, SamplingGrid};

fn main() -> fdnn::Result<()> {
    let dir = std::env::temp_dir().join("fdnn-designs");
    std::fs::create_dir_all(&dir).map_err(|e| fdnn::FdnnError::io(&dir, e))?;

    for id in 1..=5 {
        let spec = DgpSpec::by_id(id)?;
        let grid = Arc::new(SamplingGrid::equispaced(spec.dim(), &default_grid(spec.dim()))?);
        let sim = dgp::generate(&spec, 100, &grid, 42)?;
        let positives = sim.labels().iter().filter(|l| **l == Label::Pos).count();

        let path = dir.join(format!("dgp{id}.csv"));
        save_csv(&path, &grid, &sim.observations)?;
        let back = load_csv(&path)?;
        assert_eq!(back.observations.len(), 100);

        println!(
            "design {id}: d={} grid {:?}, {positives} of 100 labelled +1, first curve starts {:.3}, saved to {}",
            spec.dim(),
            grid.points_per_axis(),
            sim.observations[0].values()[0],
            path.display()
        );
    }
    Ok(())
}
