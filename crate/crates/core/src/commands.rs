//! File-producing commands behind the `covsel` binary. Every command writes
//! into the experiment's output directory and returns its JSON report.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::covest::{select_model, SelectionResult};
use crate::error::{CovselError, Result};
use crate::experiment::Experiment;
use crate::io::{fmt_f64, write_matrix_csv_path};
use crate::sim::{mc_risk_curve_with, oracle_index, McOptions, RiskCurve, MIN_RISK_REPS};
use crate::verify::{run_suite, VerifyConfig, VerifyReport, K_SIGMA};

/// Runs `f` on a pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(CovselError::Config("threads must be >= 1".into())),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| CovselError::Config(format!("thread pool: {e}"))),
    }
}

fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn write_json(path: PathBuf, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn write_sigma_true(exp: &Experiment) -> Result<()> {
    if let Some(sigma) = exp.sigma_true()? {
        write_matrix_csv_path(
            exp.output_dir.join("sigma_true.csv"),
            exp.points.as_slice(),
            &sigma,
        )?;
    }
    Ok(())
}

/// Scores the nested collection on the experiment's samples.
///
/// Writes `ure_curve.csv`, `selected.json`, `sigma_hat.csv` and, for
/// simulated data, `sigma_true.csv`.
pub fn cmd_select(exp: &Experiment) -> Result<SelectionResult> {
    let x = exp.samples()?;
    let collection = exp.collection()?;
    let sel = select_model(&x, &collection)?;

    prepare_dir(&exp.output_dir)?;
    let mut w = csv::Writer::from_path(exp.output_dir.join("ure_curve.csv"))?;
    w.write_record(["m", "ure", "gamma_sq", "residual_sq"])?;
    for s in &sel.scores {
        w.write_record([
            s.model.len().to_string(),
            fmt_f64(s.ure),
            fmt_f64(s.gamma_sq),
            fmt_f64(s.residual_sq),
        ])?;
    }
    w.flush()?;
    write_json(exp.output_dir.join("selected.json"), &sel.to_json())?;
    write_matrix_csv_path(
        exp.output_dir.join("sigma_hat.csv"),
        exp.points.as_slice(),
        &sel.estimate.sigma_hat,
    )?;
    write_sigma_true(exp)?;
    Ok(sel)
}

/// Risk curve plus the model that minimizes it.
#[derive(Debug, Clone)]
pub struct RiskCurveRun {
    pub curve: RiskCurve,
    /// Index of the first minimizer.
    pub oracle: usize,
}

impl RiskCurveRun {
    pub fn oracle_size(&self) -> usize {
        self.curve.models[self.oracle]
    }

    pub fn to_json(&self) -> Value {
        let c = &self.curve;
        json!({
            "m0": self.oracle_size(),
            "min_risk": c.risk[self.oracle],
            "min_risk_std_err": c.std_err[self.oracle],
            "n": c.n,
            "reps": c.reps,
            "pool": c.pool,
            "decomposition_holds": c.satisfies_decomposition(K_SIGMA),
        })
    }
}

/// Monte Carlo risk curve of the nested collection. Writes `risk_curve.csv`
/// and `oracle.json`.
pub fn cmd_risk_curve(exp: &Experiment) -> Result<RiskCurveRun> {
    if exp.reps < MIN_RISK_REPS {
        return Err(CovselError::RepsTooSmall {
            got: exp.reps,
            min: MIN_RISK_REPS,
        });
    }
    let spec = exp.process()?;
    let collection = exp.collection()?;
    let curve = mc_risk_curve_with(
        spec,
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

    prepare_dir(&exp.output_dir)?;
    run.curve
        .write_csv(fs::File::create(exp.output_dir.join("risk_curve.csv"))?)?;
    write_json(exp.output_dir.join("oracle.json"), &run.to_json())?;
    Ok(run)
}

/// Draws `n` replicates. Writes `samples.csv` and `sigma_true.csv`.
pub fn cmd_simulate(exp: &Experiment) -> Result<crate::covest::SampleSet> {
    exp.process()?;
    let x = exp.samples()?;
    prepare_dir(&exp.output_dir)?;
    x.write_csv(fs::File::create(exp.output_dir.join("samples.csv"))?)?;
    write_sigma_true(exp)?;
    Ok(x)
}

/// Runs the property suites and writes `verify.json`.
pub fn cmd_verify(cfg: &VerifyConfig, output_dir: &Path) -> Result<VerifyReport> {
    let report = run_suite(cfg)?;
    prepare_dir(output_dir)?;
    write_json(output_dir.join("verify.json"), &verify_json(cfg, &report))?;
    Ok(report)
}

pub fn verify_json(cfg: &VerifyConfig, report: &VerifyReport) -> Value {
    json!({
        "passed": report.passed,
        "config": cfg,
        "checks": report.checks,
    })
}
