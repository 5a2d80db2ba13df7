//! Cosine basis with uniform coefficients: the URE curve of one sample and
//! the spread of selected models across seeds.
//!
//! cargo run --release --example cosine_selection

use std::collections::BTreeMap;

use covsel::experiment::{ExampleKind, ExperimentConfig};
use covsel::select_model;

fn main() -> covsel::Result<()> {
    let exp = ExperimentConfig::for_example(ExampleKind::Ex2).resolve()?;
    let collection = exp.collection()?;
    let sel = select_model(&exp.samples()?, &collection)?;
    for s in &sel.scores {
        let mark = if s.model.len() == sel.selected_size() {
            "  <- selected"
        } else {
            ""
        };
        println!(
            "m = {:>2}  URE {:.6}  γ̂² {:.5}{mark}",
            s.model.len(),
            s.ure,
            s.gamma_sq
        );
    }

    let mut counts = BTreeMap::new();
    for seed in 0..50 {
        let run = ExperimentConfig {
            seed: Some(seed),
            ..ExperimentConfig::for_example(ExampleKind::Ex2)
        }
        .resolve()?;
        *counts
            .entry(select_model(&run.samples()?, &collection)?.selected_size())
            .or_insert(0) += 1;
    }
    println!("selected sizes over 50 seeds: {counts:?}");
    Ok(())
}
