//! Model selection on observations read from CSV (header row of design
//! points, one replicate per line). Without an argument a demo file is
//! simulated first.
//!
//! cargo run --example select_from_csv [samples.csv]

use covsel::basis::{nested_collection, BasisFamily};
use covsel::experiment::{ExampleKind, ExperimentConfig};
use covsel::{select_model, SampleSet};

fn main() -> covsel::Result<()> {
    let path = match std::env::args().nth(1) {
        Some(p) => p.into(),
        None => {
            let exp = ExperimentConfig::for_example(ExampleKind::Custom).resolve()?;
            let path = std::env::temp_dir().join("covsel_demo_samples.csv");
            exp.samples()?.write_csv(std::fs::File::create(&path)?)?;
            println!("simulated demo data in {}", path.display());
            path
        }
    };
    let x = SampleSet::from_csv_path(&path)?.centered();
    let max_model = x.p().min(12);
    let collection = nested_collection(&BasisFamily::Cosine, max_model, x.points())?;
    let sel = select_model(&x, &collection)?;
    println!(
        "{} replicates at {} points; selected m = {}",
        x.n(),
        x.p(),
        sel.selected_size()
    );
    println!("{}", serde_json::to_string_pretty(&sel.to_json())?);
    Ok(())
}
