//! Bayes risks of the built-in designs and the paired excess risk of a
//! fitted classifier.
//!
//! cargo run --release --example bayes_oracle

use std::sync::Arc;

use fdnn::classifier::fit_fdnn;
use fdnn::dgp::{self, bayes_risk, excess_risk, oracle_log_ratio, DgpSpec, GaussianScale};
use fdnn::{HyperGrid, SamplingGrid, TrainConfig};

fn main() -> fdnn::Result<()> {
    println!("Bayes risk, 200000 draws:");
    for id in 1..=5 {
        let spec = DgpSpec::by_id(id)?;
        let r = bayes_risk(&spec, 200_000, 1)?;
        println!("  design {id}: {:.4} ± {:.4}", r.rate, r.se);
    }
    let literal = bayes_risk(&DgpSpec::dgp1(GaussianScale::Variance), 200_000, 1)?;
    println!("  design 1 with the diagonal read as variances: {:.4}", literal.rate);

    let spec = DgpSpec::by_id(1)?;
    let xi = [-1.0, 2.0, -3.0];
    println!("log density ratio at the class +1 mean: {:.4}", oracle_log_ratio(&spec, &xi)?);

    let grid = Arc::new(SamplingGrid::equispaced(1, &[50])?);
    for n in [40, 400] {
        let train = dgp::generate(&spec, n, &grid, 2)?;
        let model = fit_fdnn(&train.observations, &HyperGrid::default_for(n), &TrainConfig::default(), 2)?;
        let ex = excess_risk(&spec, &grid, 5000, 3, |x| model.predict(x))?;
        println!("FDNN n={n:<3}: excess risk {:.4} ± {:.4}", ex.rate, ex.se);
    }
    Ok(())
}
