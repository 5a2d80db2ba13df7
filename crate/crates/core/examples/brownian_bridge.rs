//! Brownian bridge observed on 35 points, estimated with its own
//! Karhunen–Loève sine basis.
//!
//! cargo run --release --example brownian_bridge

use covsel::experiment::{ExampleKind, ExperimentConfig};
use covsel::select_model;
use covsel::sim::{mc_risk_curve_with, oracle_model, McOptions};

fn main() -> covsel::Result<()> {
    let exp = ExperimentConfig::for_example(ExampleKind::Ex3).resolve()?;
    let collection = exp.collection()?;
    let truth = exp.sigma_true()?.expect("simulated process");

    let sel = select_model(&exp.samples()?, &collection)?;
    let err = (truth.as_mat() - sel.estimate.sigma_hat.as_mat()).norm_squared();
    println!(
        "URE selects m = {}; ‖Σ − Σ̂‖² = {err:.5}",
        sel.selected_size()
    );

    let curve = mc_risk_curve_with(
        exp.process()?,
        &collection,
        exp.n,
        McOptions {
            reps: exp.reps,
            pool: exp.pool,
        },
    )?;
    println!(
        "risk minimized at m0 = {} over {} replicates",
        oracle_model(&curve),
        exp.reps
    );
    for k in 0..8 {
        println!(
            "  m = {}  risk {:.5} ± {:.1e}",
            curve.models[k], curve.risk[k], curve.std_err[k]
        );
    }
    Ok(())
}
