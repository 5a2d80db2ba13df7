//! A basis tabulated in CSV (`lambda,t_1,...,t_p`) used to estimate a
//! Brownian bridge covariance.
//!
//! cargo run --example custom_basis

use std::sync::Arc;

use covsel::basis::{nested_collection, BasisFamily, CustomBasis};
use covsel::sim::ProcessSpec;
use covsel::{select_model, simulate};

fn main() -> covsel::Result<()> {
    let p = 12;
    let ts: Vec<f64> = (0..p).map(|j| j as f64 / (p - 1) as f64).collect();
    let mut csv = String::from("lambda");
    for t in &ts {
        csv.push_str(&format!(",{t}"));
    }
    // Shifted Legendre polynomials on [0, 1].
    let legendre: [fn(f64) -> f64; 4] = [
        |_| 1.0,
        |t| 2.0 * t - 1.0,
        |t| 6.0 * t * t - 6.0 * t + 1.0,
        |t| 20.0 * t.powi(3) - 30.0 * t * t + 12.0 * t - 1.0,
    ];
    for (k, f) in legendre.iter().enumerate() {
        csv.push_str(&format!("\n{}", k + 1));
        for &t in &ts {
            csv.push_str(&format!(",{}", f(t)));
        }
    }
    let basis = BasisFamily::Custom(Arc::new(CustomBasis::from_csv(csv.as_bytes())?));
    let points = match &basis {
        BasisFamily::Custom(b) => b.points(),
        _ => unreachable!(),
    };

    let spec = ProcessSpec::brownian_bridge(points.clone(), 9);
    let x = simulate(&spec, 200)?;
    let sel = select_model(&x, &nested_collection(&basis, 4, &points)?)?;
    for s in &sel.scores {
        println!("m = {}  URE {:.5}", s.model.len(), s.ure);
    }
    println!("selected m = {}", sel.selected_size());
    Ok(())
}
