use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use covsel::commands::{
    cmd_risk_curve, cmd_select, cmd_simulate, cmd_verify, verify_json, with_threads,
};
use covsel::experiment::{ExampleKind, ExperimentConfig};
use covsel::verify::{Sabotage, VerifyConfig};
use covsel::{GridConvention, Result};

#[derive(Parser)]
#[command(
    name = "covsel",
    version,
    about = "Covariance estimation with unbiased-risk model selection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Select a model by URE and write the estimate.
    Select(Common),
    /// Monte Carlo risk curve and its minimizer.
    RiskCurve(Common),
    /// Draw replicates from the configured process.
    Simulate(Common),
    /// Run the identity and Monte Carlo property suites.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    example: Option<ExampleKind>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    /// Largest model size of the nested collection.
    #[arg(long = "M", value_name = "M")]
    max_model: Option<usize>,
    #[arg(long)]
    m_star: Option<usize>,
    /// `const:c`, `geom:c,r`, `power:k`, `alt-power:k` or `list:v1,v2,...`.
    #[arg(long)]
    variance_profile: Option<String>,
    /// `fourier`, `cosine` or `bb-kl`. Ignored with `--basis-csv`.
    #[arg(long)]
    basis: Option<String>,
    /// `gaussian`, `uniform` or `brownian-bridge`.
    #[arg(long)]
    process: Option<String>,
    #[arg(long)]
    grid: Option<GridConvention>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
    /// Draws used for the variance term of risk curves.
    #[arg(long)]
    pool: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Subtract the sample mean before estimating.
    #[arg(long)]
    center: bool,
    /// Observations CSV (header row of design points).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Tabulated basis CSV (`lambda,t1,...`).
    #[arg(long)]
    basis_csv: Option<PathBuf>,
    /// Print the JSON report on stdout.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    seed: Option<u64>,
    /// Replicate sample sets for the unbiasedness checks.
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    sabotage: Option<Sabotage>,
    #[arg(long)]
    json: bool,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let flags = ExperimentConfig {
            example: self.example,
            n: self.n,
            p: self.p,
            max_model: self.max_model,
            m_star: self.m_star,
            variance_profile: self.variance_profile.clone(),
            basis: self.basis.clone(),
            process: self.process.clone(),
            grid: self.grid,
            seed: self.seed,
            reps: self.reps,
            pool: self.pool,
            threads: self.threads,
            output_dir: self.out.clone(),
            center: self.center.then_some(true),
            data: self.data.clone(),
            basis_csv: self.basis_csv.clone(),
        };
        Ok(match &self.config {
            Some(path) => ExperimentConfig::from_json_path(path)?.overridden_by(&flags),
            None => flags,
        })
    }
}

fn print(json: bool, report: &serde_json::Value, summary: String) {
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(report).expect("serializable")
        );
    } else {
        println!("{summary}");
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Select(args) => {
            let exp = args.config()?.resolve()?;
            let sel = with_threads(exp.threads, || cmd_select(&exp))??;
            print(
                args.json,
                &sel.to_json(),
                format!(
                    "selected m = {} (URE {:.6e})",
                    sel.selected_size(),
                    sel.selected_score().ure
                ),
            );
        }
        Command::RiskCurve(args) => {
            let exp = args.config()?.resolve()?;
            let run = with_threads(exp.threads, || cmd_risk_curve(&exp))??;
            let c = &run.curve;
            print(
                args.json,
                &run.to_json(),
                format!(
                    "m0 = {} (risk {:.6e} ± {:.1e})",
                    run.oracle_size(),
                    c.risk[run.oracle],
                    c.std_err[run.oracle]
                ),
            );
        }
        Command::Simulate(args) => {
            let exp = args.config()?.resolve()?;
            let x = with_threads(exp.threads, || cmd_simulate(&exp))??;
            let report = serde_json::json!({ "n": x.n(), "p": x.p() });
            print(
                args.json,
                &report,
                format!("wrote {} replicates at {} points", x.n(), x.p()),
            );
        }
        Command::Verify(args) => {
            let defaults = VerifyConfig::default();
            let cfg = VerifyConfig {
                seed: args.seed.unwrap_or(defaults.seed),
                reps: args.reps.unwrap_or(defaults.reps),
                sabotage: args.sabotage,
                ..defaults
            };
            let out = args.out.unwrap_or_else(|| PathBuf::from("."));
            let report = with_threads(args.threads, || cmd_verify(&cfg, &out))??;
            let mut summary: Vec<String> = report
                .checks
                .iter()
                .map(|c| {
                    format!(
                        "{} {}: {}",
                        if c.passed { "PASS" } else { "FAIL" },
                        c.name,
                        c.detail
                    )
                })
                .collect();
            summary.push(if report.passed {
                "all checks passed".into()
            } else {
                let names: Vec<&str> = report.failures().iter().map(|c| c.name.as_str()).collect();
                format!("failed: {}", names.join(", "))
            });
            print(args.json, &verify_json(&cfg, &report), summary.join("\n"));
            if !report.passed {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
