//! Fits a model on CSV data, saves it, reloads it and checks the reloaded
//! model labels new data identically.
//!
//! cargo run --release --example save_and_load

use std::sync::Arc;

use fdnn::classifier::{fit_fdnn, load_model, save_model};
use fdnn::dgp::{self, DgpSpec};
use fdnn::grid::csv::{load_csv, save_csv};
use fdnn::{HyperGrid, SamplingGrid, TrainConfig};

fn main() -> fdnn::Result<()> {
    let dir = std::env::temp_dir().join("fdnn-persistence");
    std::fs::create_dir_all(&dir).map_err(|e| fdnn::FdnnError::io(&dir, e))?;

    let spec = DgpSpec::by_id(3)?;
    let grid = Arc::new(SamplingGrid::equispaced(2, &[7, 7])?);
    let data_path = dir.join("surfaces.csv");
    save_csv(&data_path, &grid, &dgp::generate(&spec, 150, &grid, 5)?.observations)?;

    let data = load_csv(&data_path)?;
    let model = fit_fdnn(&data.observations, &HyperGrid::default_for(150), &TrainConfig::default(), 5)?;
    let model_path = dir.join("surfaces.model");
    save_model(&model_path, &model)?;
    let size = std::fs::metadata(&model_path).map_err(|e| fdnn::FdnnError::io(&model_path, e))?.len();

    let reloaded = load_model(&model_path)?;
    let fresh = dgp::generate(&spec, 500, &grid, 6)?;
    let a = model.predict_all(&fresh.observations)?;
    let b = reloaded.predict_all(&fresh.observations)?;
    println!(
        "model with J = {} saved to {} ({size} bytes); reloaded predictions identical on 500 new surfaces: {}",
        model.j(),
        model_path.display(),
        a == b
    );
    Ok(())
}
