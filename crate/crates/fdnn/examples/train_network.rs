//! Trains a bounded ReLU network on hinge loss directly from score vectors
//! and prints the risk trajectory.
//!
//! cargo run --example train_network

use fdnn::dnn::{hinge_risk, train_with_report};
use fdnn::{Label, NetworkArchitecture, ScoreMatrix, TrainConfig};
use rand::Rng;

fn main() -> fdnn::Result<()> {
    // two classes separated by the circle |ξ| = 1
    let mut rng = fdnn::rng::seeded(3);
    let rows: Vec<Vec<f64>> = (0..400).map(|_| vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]).collect();
    let labels = rows
        .iter()
        .map(|r| if r[0] * r[0] + r[1] * r[1] < 1.0 { Label::Pos } else { Label::Neg })
        .collect();
    let scores = ScoreMatrix::from_rows(&rows, labels)?;

    for (depth, width, bound) in [(1, 4, 10.0), (2, 16, 10.0), (2, 16, 0.2)] {
        let arch = NetworkArchitecture::uniform(2, depth, width, bound)?;
        let report = train_with_report(&scores, &arch, &TrainConfig::default())?;
        let wrong = (0..scores.len())
            .filter(|&i| Label::from_sign(report.params.forward(&scores.row(i)).unwrap()) != scores.labels()[i])
            .count();
        let trail: Vec<String> = report.epoch_risks.iter().step_by(30).map(|r| format!("{r:.3}")).collect();
        println!(
            "L={depth} width={width:>2} B={bound:<4}: hinge risk {:.3} -> {:.3} [{}], training error {:.3}, max |θ| {:.3}",
            report.initial_risk,
            hinge_risk(&report.params, &scores)?,
            trail.join(" "),
            wrong as f64 / scores.len() as f64,
            report.params.max_abs()
        );
    }
    Ok(())
}
