//! Averages the unbiased risk estimate over many samples and compares it
//! with the Monte Carlo risk plus tr(Φ)/n, model by model.
//!
//! cargo run --release --example ure_unbiasedness

use covsel::basis::{nested_collection, BasisFamily};
use covsel::verify::{small_gaussian_spec, ure_unbiasedness, UreCheckOptions};

fn main() -> covsel::Result<()> {
    let spec = small_gaussian_spec(4, 42)?;
    let collection = nested_collection(&BasisFamily::Cosine, 4, &spec.points)?;
    let opts = UreCheckOptions {
        reps: 10_000,
        risk_reps: 100_000,
        pool: 100_000,
        sabotage: None,
    };
    for c in ure_unbiasedness(&spec, &collection, 10, opts)? {
        println!(
            "m = {}: mean URE {:.4} vs R + tr(Φ)/n = {:.4}  ({:+.2} se)",
            c.model_size,
            c.mean_ure,
            c.risk + c.trace_phi_over_n,
            c.gap / c.combined_std_err
        );
    }
    Ok(())
}
