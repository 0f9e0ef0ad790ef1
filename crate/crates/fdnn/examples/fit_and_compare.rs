//! Fits FDNN with the split-sample architecture search on design 2 and
//! compares it with the QDA and product-KDE baselines and the Bayes rule.
//!
//! cargo run --release --example fit_and_compare

use std::sync::Arc;

use fdnn::classifier::{fit_baseline, fit_fdnn, misclassification_rate, BaselineKind};
use fdnn::dgp::{self, bayes_classify, DgpSpec};
use fdnn::{HyperGrid, SamplingGrid, TrainConfig};

fn main() -> fdnn::Result<()> {
    let spec = DgpSpec::by_id(2)?;
    let grid = Arc::new(SamplingGrid::equispaced(1, &[50])?);
    let train = dgp::generate(&spec, 200, &grid, 10)?;
    let test = dgp::generate(&spec, 1000, &grid, 11)?;
    let truth = test.labels();

    let model = fit_fdnn(&train.observations, &HyperGrid::default_for(200), &TrainConfig::default(), 10)?;
    let mut rows = model.selection_report.clone();
    rows.sort_by(|a, b| a.validation_error.total_cmp(&b.validation_error));
    println!("best candidates (L, J, width, B):");
    for row in rows.iter().take(5) {
        let h = row.hyper;
        println!("  ({}, {}, {}, {})  validation error {:.3}", h.depth, h.j, h.width, h.bound, row.validation_error);
    }
    let fdnn_rate = misclassification_rate(&model.predict_all(&test.observations)?, &truth)?;

    let qda = fit_baseline(&train.observations, BaselineKind::Qda, &[2, 4, 6, 10], 10)?;
    let nb = fit_baseline(&train.observations, BaselineKind::NpBayes, &[2, 4, 6, 10], 10)?;
    let bayes: Vec<_> = test.coefficients.iter().map(|xi| bayes_classify(&spec, xi)).collect::<fdnn::Result<_>>()?;

    println!("test error on 1000 draws:");
    println!("  FDNN   {fdnn_rate:.3}  (J = {})", model.j());
    println!("  QD     {:.3}  (J = {})", misclassification_rate(&qda.predict_all(&test.observations)?, &truth)?, qda.j);
    println!("  NB     {:.3}  (J = {})", misclassification_rate(&nb.predict_all(&test.observations)?, &truth)?, nb.j);
    println!("  Bayes  {:.3}", misclassification_rate(&bayes, &truth)?);
    Ok(())
}
