//! Monte Carlo check of the oracle inequality for URE selection on a small
//! cosine configuration, for several values of the trade-off constant A.
//!
//! cargo run --release --example oracle_inequality

use covsel::basis::{nested_collection, BasisFamily};
use covsel::verify::reduced_cosine_spec;
use covsel::verify_oracle_inequality;

fn main() -> covsel::Result<()> {
    let spec = reduced_cosine_spec(10, 42)?;
    let collection = nested_collection(&BasisFamily::Cosine, 8, &spec.points)?;
    for a in [0.5, 1.0, 2.0, 4.0] {
        let r = verify_oracle_inequality(&spec, &collection, 50, 2000, a)?;
        println!(
            "A = {a}: E‖Σ̂ − Σ‖² = {:.4} ± {:.4}, bound {:.4}, oracle m = {}, holds: {}",
            r.lhs, r.lhs_std_err, r.rhs, r.oracle_model, r.holds
        );
    }
    Ok(())
}
