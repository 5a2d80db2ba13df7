//! Fourier basis with unit coefficient variances: Monte Carlo risk curve,
//! its minimizer, and the model picked by the unbiased risk estimate.
//!
//! cargo run --release --example fourier_oracle [reps]

use covsel::commands::RiskCurveRun;
use covsel::experiment::{ExampleKind, ExperimentConfig};
use covsel::select_model;
use covsel::sim::{mc_risk_curve_with, oracle_index, McOptions};

fn main() -> covsel::Result<()> {
    let mut cfg = ExperimentConfig::for_example(ExampleKind::Ex1);
    cfg.reps = std::env::args()
        .nth(1)
        .map(|r| r.parse().expect("reps must be an integer"));
    let exp = cfg.resolve()?;
    let collection = exp.collection()?;

    let curve = mc_risk_curve_with(
        exp.process()?,
        &collection,
        exp.n,
        McOptions {
            reps: exp.reps,
            pool: exp.pool,
        },
    )?;
    let run = RiskCurveRun {
        oracle: oracle_index(&curve),
        curve,
    };
    println!(
        "{:>3} {:>12} {:>10} {:>12}",
        "m", "risk", "std err", "bias²"
    );
    for k in 0..run.curve.models.len() {
        let c = &run.curve;
        println!(
            "{:>3} {:>12.5} {:>10.2e} {:>12.5}",
            c.models[k], c.risk[k], c.std_err[k], c.bias_sq[k]
        );
    }
    println!(
        "risk minimized at m0 = {} ({} replicates)",
        run.oracle_size(),
        exp.reps
    );

    let sel = select_model(&exp.samples()?, &collection)?;
    println!(
        "URE selects m = {} on seed {}",
        sel.selected_size(),
        exp.seed
    );
    Ok(())
}
