//! Property suites: exact algebraic identities checked on random inputs and
//! Monte Carlo checks of the unbiasedness and risk statements behind the
//! selection rule. Used by `covsel verify` and by the acceptance tests.
//!
//! Monte Carlo checks pass when the discrepancy is within three combined
//! standard errors.

use std::str::FromStr;

use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::basis::{equispaced_points, nested_collection, BasisFamily, DesignMatrix};
use crate::covest::{gamma_hat_sq, select_model};
use crate::error::{CovselError, Result};
use crate::experiment::Profile;
use crate::linalg::{
    default_rtol, kron, project_to_model_space, projector, pseudo_inverse, unvec, vec, Mat, SymMat,
};
use crate::sim::{
    mc_risk_curve_with, stream_rng, trace_phi, verify_oracle_inequality, Accumulator, McOptions,
    MeanEstimate, ProcessSpec, Stream,
};

pub const K_SIGMA: f64 = 3.0;

/// Deliberate defects for mutation-testing the suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sabotage {
    /// Doubles every `γ̂²`.
    GammaFactor,
}

impl FromStr for Sabotage {
    type Err = CovselError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gamma-factor" => Ok(Self::GammaFactor),
            other => Err(CovselError::Config(format!("unknown sabotage {other:?}"))),
        }
    }
}

fn gamma_factor(sabotage: Option<Sabotage>) -> f64 {
    match sabotage {
        Some(Sabotage::GammaFactor) => 2.0,
        None => 1.0,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    fn new(checks: Vec<CheckResult>) -> Self {
        Self {
            passed: checks.iter().all(|c| c.passed),
            checks,
        }
    }

    pub fn failures(&self) -> Vec<&CheckResult> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

fn random_mat<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Mat {
    Mat::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

fn rel(err: f64, scale: f64) -> f64 {
    err / scale.max(f64::MIN_POSITIVE)
}

/// Exact identities on random inputs: vec/Kronecker rules, projector laws,
/// projection optimality and the Kronecker route for `γ̂²`.
pub fn algebraic_suite(seed: u64) -> Vec<CheckResult> {
    let mut rng = stream_rng(seed, Stream::Check, 0);
    let mut out = Vec::new();

    let mut worst = 0.0_f64;
    for k in 0..100 {
        let a = random_mat(&mut rng, 1 + k % 6, 1 + (k / 6) % 5);
        let l2 = vec(&a).iter().map(|x| x * x).sum::<f64>().sqrt();
        worst = worst.max(rel((a.norm() - l2).abs(), a.norm()));
    }
    out.push(CheckResult::new(
        "vec_frobenius",
        worst <= 1e-12,
        format!("max rel err {worst:.2e}"),
    ));

    let mut worst = 0.0_f64;
    for k in 0..100 {
        let (r1, r2, r3, r4) = (1 + k % 4, 1 + (k / 4) % 4, 1 + (k / 16) % 3, 2);
        let a = random_mat(&mut rng, r1, r2);
        let b = random_mat(&mut rng, r2, r3);
        let c = random_mat(&mut rng, r3, r4);
        let lhs = DVector::from_vec(vec(&(&a * &b * &c)));
        let rhs = kron(&c.transpose(), &a) * DVector::from_vec(vec(&b));
        worst = worst.max(rel((&lhs - &rhs).norm(), lhs.norm()));
    }
    out.push(CheckResult::new(
        "vec_abc_kron",
        worst <= 1e-10,
        format!("max rel err {worst:.2e}"),
    ));

    let mut worst = 0.0_f64;
    let mut transpose_exact = true;
    for _ in 0..50 {
        let m: Vec<Mat> = (0..4).map(|_| random_mat(&mut rng, 3, 3)).collect();
        let lhs = kron(&m[0], &m[1]) * kron(&m[2], &m[3]);
        let rhs = kron(&(&m[0] * &m[2]), &(&m[1] * &m[3]));
        worst = worst.max(rel((&lhs - &rhs).norm(), rhs.norm()));
        transpose_exact &=
            kron(&m[0], &m[1]).transpose() == kron(&m[0].transpose(), &m[1].transpose());
    }
    out.push(CheckResult::new(
        "kron_mixed_product",
        worst <= 1e-12,
        format!("max rel err {worst:.2e}"),
    ));
    out.push(CheckResult::new(
        "kron_transpose",
        transpose_exact,
        "exact equality",
    ));

    let mut worst = 0.0_f64;
    let mut ranks_ok = true;
    let mut designs: Vec<Mat> = (1..=5)
        .map(|r| random_mat(&mut rng, 8, r) * random_mat(&mut rng, r, 5))
        .collect();
    let pts = equispaced_points(10).expect("p >= 2");
    for basis in [
        BasisFamily::Cosine,
        BasisFamily::BrownianBridgeKl,
        BasisFamily::FourierScaled { p_scale: 10 },
    ] {
        for d in nested_collection(&basis, 8, &pts).expect("valid basis") {
            designs.push(d.g().clone());
        }
    }
    for g in &designs {
        let p = projector(g).expect("finite design");
        let pi = p.matrix().as_mat();
        let gram = SymMat::symmetrize(&(g.transpose() * g)).expect("square");
        let eig = nalgebra::SymmetricEigen::new(gram.into_inner());
        let top = eig.eigenvalues.max();
        let rank = eig.eigenvalues.iter().filter(|&&l| l > 1e-9 * top).count();
        worst = worst
            .max((pi * pi - pi).norm())
            .max((pi - pi.transpose()).norm())
            .max(rel((pi * g - g).norm(), g.norm()))
            .max((pi.trace() - rank as f64).abs());
        ranks_ok &= p.rank() == rank;
    }
    out.push(CheckResult::new(
        "projector_laws",
        worst <= 1e-8 && ranks_ok,
        format!("max violation {worst:.2e}, ranks consistent: {ranks_ok}"),
    ));

    // Any generalized inverse of GᵀG gives the same projector: perturb the
    // Moore–Penrose inverse M into M + (I − MA)U + W(I − AM).
    let mut worst = 0.0_f64;
    for _ in 0..20 {
        let g = random_mat(&mut rng, 6, 2) * random_mat(&mut rng, 2, 4);
        let a = g.transpose() * &g;
        let m = pseudo_inverse(&a, default_rtol(&a)).expect("svd");
        let eye = Mat::identity(4, 4);
        let other = &m
            + (&eye - &m * &a) * random_mat(&mut rng, 4, 4)
            + random_mat(&mut rng, 4, 4) * (&eye - &a * &m);
        let pi_mp = &g * &m * g.transpose();
        let pi_other = &g * &other * g.transpose();
        worst = worst.max((pi_mp - pi_other).norm());

        let mix = random_mat(&mut rng, 4, 4) + Mat::identity(4, 4) * 3.0;
        let p1 = projector(&g).expect("finite");
        let p2 = projector(&(&g * mix)).expect("finite");
        worst = worst.max((p1.matrix().as_mat() - p2.matrix().as_mat()).norm());
    }
    out.push(CheckResult::new(
        "projector_ginverse_invariance",
        worst <= 1e-8,
        format!("max deviation {worst:.2e}"),
    ));

    let mut worst_margin = f64::INFINITY;
    for _ in 0..5 {
        let a = SymMat::symmetrize(&random_mat(&mut rng, 6, 6))
            .expect("square")
            .into_inner();
        let g = random_mat(&mut rng, 6, 3);
        let best = project_to_model_space(&a, &projector(&g).expect("finite")).expect("dims");
        let best_dist = (&a - best.as_mat()).norm();
        for _ in 0..1000 {
            let psi = SymMat::symmetrize(&random_mat(&mut rng, 3, 3)).expect("square");
            let dist = (&a - &g * psi.as_mat() * g.transpose()).norm();
            worst_margin = worst_margin.min(dist - best_dist);
        }
    }
    out.push(CheckResult::new(
        "projection_optimality",
        worst_margin >= -1e-12,
        format!("smallest margin over 5000 competitors {worst_margin:.3e}"),
    ));

    let mut worst = 0.0_f64;
    for _ in 0..20 {
        let f = random_mat(&mut rng, 6, 3);
        let a = &f * f.transpose();
        let g = random_mat(&mut rng, 6, 2);
        let proj = project_to_model_space(&a, &projector(&g).expect("finite")).expect("dims");
        worst = worst.max(-proj.min_eigenvalue() / a.norm());
    }
    out.push(CheckResult::new(
        "projection_psd",
        worst <= 1e-8,
        format!("most negative rel eigenvalue {:.2e}", -worst),
    ));

    let mut worst = 0.0_f64;
    for _ in 0..20 {
        let a = random_mat(&mut rng, 5, 5);
        let g = random_mat(&mut rng, 5, 2);
        let p = projector(&g).expect("finite");
        let direct = project_to_model_space(&a, &p).expect("dims");
        let pi = p.matrix().as_mat();
        let sym = (&a + a.transpose()) * 0.5;
        let routed = kron(pi, pi) * DVector::from_vec(vec(&sym));
        let routed = unvec(routed.as_slice(), 5, 5).expect("shape");
        worst = worst.max(rel((direct.as_mat() - routed).norm(), direct.norm()));
    }
    out.push(CheckResult::new(
        "projection_kron_route",
        worst <= 1e-10,
        format!("max rel err {worst:.2e}"),
    ));

    let mut worst = 0.0_f64;
    for p in 2..=5 {
        let pts = equispaced_points(p).expect("p >= 2");
        let data = random_mat(&mut rng, 7, p);
        let x = crate::covest::SampleSet::new(data, pts.clone()).expect("valid");
        let s = crate::covest::empirical_covariance(&x);
        let vs = DVector::from_vec(vec(s.as_mat()));
        for d in nested_collection(&BasisFamily::Cosine, p, &pts).expect("valid") {
            let pi = d.projector().matrix().as_mat();
            let big = kron(pi, pi);
            let brute: f64 = x
                .data()
                .row_iter()
                .map(|row| {
                    let xi = row.transpose();
                    (&big * (DVector::from_vec(vec(&(&xi * xi.transpose()))) - &vs)).norm_squared()
                })
                .sum::<f64>()
                / (x.n() - 1) as f64;
            let fast = gamma_hat_sq(&x, &d).expect("same points");
            worst = worst.max(rel((fast - brute).abs(), brute));
        }
    }
    out.push(CheckResult::new(
        "gamma_kron_route",
        worst <= 1e-10,
        format!("max rel err {worst:.2e}"),
    ));

    let mut worst = 0.0_f64;
    for _ in 0..20 {
        let a = random_mat(&mut rng, 6, 2) * random_mat(&mut rng, 2, 4);
        let m = pseudo_inverse(&a, default_rtol(&a)).expect("svd");
        worst = worst
            .max(rel((&a * &m * &a - &a).norm(), a.norm()))
            .max(rel((&m * &a * &m - &m).norm(), m.norm()));
    }
    out.push(CheckResult::new(
        "pseudo_inverse_reflexive",
        worst <= 1e-8,
        format!("max rel err {worst:.2e}"),
    ));

    out
}

/// Gaussian test process on `p` endpoint-grid points: cosine basis with
/// variances `1/λ²`, `λ = 1..=p+2`.
pub fn small_gaussian_spec(p: usize, seed: u64) -> Result<ProcessSpec> {
    let variances = Profile::Power(2.0).values(p + 2)?;
    ProcessSpec::basis_gaussian(BasisFamily::Cosine, equispaced_points(p)?, &variances, seed)
}

/// Reduced cosine/uniform process used for the oracle-inequality check.
pub fn reduced_cosine_spec(p: usize, seed: u64) -> Result<ProcessSpec> {
    let weights = Profile::AltPower(2.0).values(50)?;
    ProcessSpec::basis_uniform(BasisFamily::Cosine, equispaced_points(p)?, &weights, seed)
}

#[derive(Debug, Clone, Serialize)]
pub struct UreModelCheck {
    pub model_size: usize,
    pub mean_ure: f64,
    pub ure_std_err: f64,
    pub risk: f64,
    pub risk_std_err: f64,
    pub trace_phi_over_n: f64,
    pub gap: f64,
    pub combined_std_err: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct UreCheckOptions {
    /// Replicate sample sets on which URE is averaged.
    pub reps: usize,
    /// Replicates of the independent risk estimate.
    pub risk_reps: usize,
    /// Single draws for the independent `tr(Φ)` estimate.
    pub pool: usize,
    pub sabotage: Option<Sabotage>,
}

/// Checks `E[URE(m)] = R(m) + tr(Φ)/n` for every model. URE is averaged
/// over `reps` sample sets; `R` and `tr(Φ)` come from independent streams.
pub fn ure_unbiasedness(
    spec: &ProcessSpec,
    collection: &[DesignMatrix],
    n: usize,
    opts: UreCheckOptions,
) -> Result<Vec<UreModelCheck>> {
    let factor = gamma_factor(opts.sabotage);
    let prepared = spec.prepare()?;
    let per_rep = (0..opts.reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(spec.seed, Stream::Check, r as u64);
            let x = prepared.sample_set(n, &mut rng)?;
            let sel = select_model(&x, collection)?;
            Ok(sel
                .scores
                .iter()
                .map(|s| s.residual_sq + 2.0 * factor * s.gamma_sq / n as f64)
                .collect::<Vec<f64>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let ure = column_means(&per_rep, collection.len());

    let risk_spec = spec.with_seed(spec.seed.wrapping_add(1));
    let curve = mc_risk_curve_with(
        &risk_spec,
        collection,
        n,
        McOptions {
            reps: opts.risk_reps,
            pool: opts.pool,
        },
    )?;
    let tphi = trace_phi(&spec.with_seed(spec.seed.wrapping_add(2)), opts.pool)?;
    let nf = n as f64;

    Ok((0..collection.len())
        .map(|k| {
            let expected = curve.risk[k] + tphi.mean / nf;
            let gap = ure[k].mean - expected;
            let se =
                (ure[k].std_err.powi(2) + curve.std_err[k].powi(2) + (tphi.std_err / nf).powi(2))
                    .sqrt();
            UreModelCheck {
                model_size: collection[k].size(),
                mean_ure: ure[k].mean,
                ure_std_err: ure[k].std_err,
                risk: curve.risk[k],
                risk_std_err: curve.std_err[k],
                trace_phi_over_n: tphi.mean / nf,
                gap,
                combined_std_err: se,
                passed: gap.abs() <= K_SIGMA * se,
            }
        })
        .collect())
}

fn column_means(rows: &[Vec<f64>], width: usize) -> Vec<MeanEstimate> {
    let mut accs = vec![Accumulator::default(); width];
    for row in rows {
        for (a, &v) in accs.iter_mut().zip(row) {
            a.push(v);
        }
    }
    accs.iter().map(Accumulator::finish).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct GammaModelCheck {
    pub model_size: usize,
    pub mean_gamma_sq: f64,
    pub gamma_std_err: f64,
    /// `tr((Π⊗Π)Φ̂)` from the explicitly built `Φ̂`.
    pub kron_trace: f64,
    pub kron_trace_std_err: f64,
    pub combined_std_err: f64,
    pub passed: bool,
}

/// `Φ̂ = mean of (vec(xxᵀ) − vec(Σ))(vec(xxᵀ) − vec(Σ))ᵀ`, a `p²×p²` matrix.
/// Only meant for very small `p`.
pub fn explicit_phi(spec: &ProcessSpec, draws: usize) -> Result<Mat> {
    let prepared = spec.prepare()?;
    let p = prepared.p();
    let vs = DVector::from_vec(vec(prepared.sigma()));
    let chunk = 10_000;
    let chunks = draws.div_ceil(chunk);
    let partials: Vec<Mat> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(spec.seed, Stream::Check, (1 << 40) + c as u64);
            let mut acc = Mat::zeros(p * p, p * p);
            for _ in 0..chunk.min(draws - c * chunk) {
                let x = prepared.draw(&mut rng);
                let d = DVector::from_vec(vec(&(&x * x.transpose()))) - &vs;
                acc.ger(1.0, &d, &d, 1.0);
            }
            acc
        })
        .collect();
    let mut phi = Mat::zeros(p * p, p * p);
    for part in &partials {
        phi += part;
    }
    Ok(phi / draws as f64)
}

/// Checks `E[γ̂²_m] = tr((Π_m⊗Π_m)Φ)` with `Φ̂` materialized from
/// `phi_draws` independent draws.
pub fn gamma_unbiasedness(
    spec: &ProcessSpec,
    collection: &[DesignMatrix],
    n: usize,
    reps: usize,
    phi_draws: usize,
    sabotage: Option<Sabotage>,
) -> Result<Vec<GammaModelCheck>> {
    let factor = gamma_factor(sabotage);
    let prepared = spec.prepare()?;
    let per_rep = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(spec.seed, Stream::Check, r as u64);
            let x = prepared.sample_set(n, &mut rng)?;
            collection
                .iter()
                .map(|d| Ok(factor * gamma_hat_sq(&x, d)?))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let gamma = column_means(&per_rep, collection.len());

    let phi_spec = spec.with_seed(spec.seed.wrapping_add(3));
    let phi = explicit_phi(&phi_spec, phi_draws)?;

    // Spread of the per-draw terms dᵀ(Π⊗Π)d, for the error of the trace.
    let phi_prepared = phi_spec.prepare()?;
    let vs = DVector::from_vec(vec(phi_prepared.sigma()));
    let bigs: Vec<Mat> = collection
        .iter()
        .map(|d| {
            let pi = d.projector().matrix().as_mat();
            kron(pi, pi)
        })
        .collect();
    let mut spread = vec![Accumulator::default(); collection.len()];
    let mut rng = stream_rng(phi_spec.seed, Stream::Check, 1 << 41);
    for _ in 0..phi_draws.min(100_000) {
        let x = phi_prepared.draw(&mut rng);
        let d = DVector::from_vec(vec(&(&x * x.transpose()))) - &vs;
        for (acc, big) in spread.iter_mut().zip(&bigs) {
            acc.push(d.dot(&(big * &d)));
        }
    }

    Ok(collection
        .iter()
        .enumerate()
        .map(|(k, d)| {
            let kron_trace = (&bigs[k] * &phi).trace();
            let sd = spread[k].finish().std_err * (spread[k].finish().count as f64).sqrt();
            let kron_se = sd / (phi_draws as f64).sqrt();
            let se = gamma[k].std_err.hypot(kron_se);
            GammaModelCheck {
                model_size: d.size(),
                mean_gamma_sq: gamma[k].mean,
                gamma_std_err: gamma[k].std_err,
                kron_trace,
                kron_trace_std_err: kron_se,
                combined_std_err: se,
                passed: (gamma[k].mean - kron_trace).abs() <= K_SIGMA * se,
            }
        })
        .collect())
}

/// For i.i.d. `v_i` with covariance `V`, `E[(v_i − v̄)(v_i − v̄)ᵀ] = ((n−1)/n)V`.
/// Returns the largest deviation in standard errors over all entries.
pub fn sample_mean_identity(seed: u64, n: usize, reps: usize) -> Result<(f64, bool)> {
    let v = Mat::from_row_slice(3, 3, &[2.0, 0.6, -0.3, 0.6, 1.0, 0.2, -0.3, 0.2, 0.5]);
    let pts = equispaced_points(3)?;
    let spec = ProcessSpec::gaussian(SymMat::new(v.clone())?, pts, seed)?;
    let prepared = spec.prepare()?;
    let per_rep: Vec<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, Stream::Check, r as u64);
            let x = prepared.sample(n, &mut rng);
            let mean = x.row_mean();
            let mut acc = Mat::zeros(3, 3);
            for row in x.row_iter() {
                let d = (row - &mean).transpose();
                acc += &d * d.transpose();
            }
            vec(&(acc / n as f64))
        })
        .collect();
    let stats = column_means(&per_rep, 9);
    let factor = (n as f64 - 1.0) / n as f64;
    let worst = stats
        .iter()
        .zip(vec(&v))
        .map(|(e, vij)| (e.mean - factor * vij).abs() / e.std_err)
        .fold(0.0, f64::max);
    Ok((worst, worst <= K_SIGMA))
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyConfig {
    pub p: usize,
    pub n: usize,
    pub reps: usize,
    pub risk_reps: usize,
    pub pool: usize,
    pub phi_draws: usize,
    pub oracle_reps: usize,
    pub seed: u64,
    pub sabotage: Option<Sabotage>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            p: 4,
            n: 10,
            reps: 10_000,
            risk_reps: 100_000,
            pool: 100_000,
            phi_draws: 1_000_000,
            oracle_reps: 500,
            seed: 42,
            sabotage: None,
        }
    }
}

/// Runs every check.
pub fn run_suite(cfg: &VerifyConfig) -> Result<VerifyReport> {
    let mut checks = algebraic_suite(cfg.seed);

    let spec = small_gaussian_spec(cfg.p, cfg.seed)?;
    let collection = nested_collection(&BasisFamily::Cosine, cfg.p, &spec.points)?;

    let ure = ure_unbiasedness(
        &spec,
        &collection,
        cfg.n,
        UreCheckOptions {
            reps: cfg.reps,
            risk_reps: cfg.risk_reps,
            pool: cfg.pool,
            sabotage: cfg.sabotage,
        },
    )?;
    checks.push(CheckResult::new(
        "ure_unbiasedness",
        ure.iter().all(|c| c.passed),
        ure.iter()
            .map(|c| {
                format!(
                    "m={}: gap {:.3e} ({:.2} se)",
                    c.model_size,
                    c.gap,
                    c.gap / c.combined_std_err
                )
            })
            .collect::<Vec<_>>()
            .join("; "),
    ));

    let gamma = gamma_unbiasedness(
        &spec,
        &collection,
        cfg.n,
        cfg.reps,
        cfg.phi_draws,
        cfg.sabotage,
    )?;
    checks.push(CheckResult::new(
        "gamma_unbiasedness",
        gamma.iter().all(|c| c.passed),
        gamma
            .iter()
            .map(|c| {
                format!(
                    "m={}: mean {:.4e} vs {:.4e} ({:.2} se)",
                    c.model_size,
                    c.mean_gamma_sq,
                    c.kron_trace,
                    (c.mean_gamma_sq - c.kron_trace) / c.combined_std_err
                )
            })
            .collect::<Vec<_>>()
            .join("; "),
    ));

    let (worst, ok) = sample_mean_identity(cfg.seed, 5, 20_000)?;
    checks.push(CheckResult::new(
        "sample_mean_identity",
        ok,
        format!("worst entry {worst:.2} se"),
    ));

    let curve = mc_risk_curve_with(
        &spec,
        &collection,
        cfg.n,
        McOptions {
            reps: 2_000,
            pool: cfg.pool,
        },
    )?;
    let worst = curve
        .decomposition_gaps()
        .iter()
        .zip(curve.gap_std_errs())
        .map(|(g, se)| g.abs() / se)
        .fold(0.0, f64::max);
    checks.push(CheckResult::new(
        "risk_decomposition",
        curve.satisfies_decomposition(K_SIGMA),
        format!("worst gap {worst:.2} se"),
    ));

    let reduced = reduced_cosine_spec(10, cfg.seed)?;
    let reduced_coll = nested_collection(&BasisFamily::Cosine, 8, &reduced.points)?;
    let report = verify_oracle_inequality(&reduced, &reduced_coll, 50, cfg.oracle_reps, 1.0)?;
    checks.push(CheckResult::new(
        "oracle_inequality",
        report.holds,
        format!(
            "E loss {:.4e} <= bound {:.4e} (+3 se = {:.2e})",
            report.lhs,
            report.rhs,
            3.0 * report.combined_std_err
        ),
    ));

    Ok(VerifyReport::new(checks))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algebraic_identities_hold() {
        for check in algebraic_suite(7) {
            assert!(check.passed, "{}: {}", check.name, check.detail);
        }
    }

    #[test]
    fn sabotage_parses() {
        assert_eq!(
            "gamma-factor".parse::<Sabotage>().unwrap(),
            Sabotage::GammaFactor
        );
        assert!("other".parse::<Sabotage>().is_err());
    }

    #[test]
    fn sample_mean_identity_holds() {
        let (worst, ok) = sample_mean_identity(3, 5, 20_000).unwrap();
        assert!(ok, "worst {worst}");
    }

    fn small_ure(sabotage: Option<Sabotage>) -> Vec<UreModelCheck> {
        let spec = small_gaussian_spec(3, 11).unwrap();
        let coll = nested_collection(&BasisFamily::Cosine, 3, &spec.points).unwrap();
        ure_unbiasedness(
            &spec,
            &coll,
            10,
            UreCheckOptions {
                reps: 20_000,
                risk_reps: 20_000,
                pool: 100_000,
                sabotage,
            },
        )
        .unwrap()
    }

    #[test]
    fn ure_is_unbiased_and_sabotage_is_caught() {
        for c in small_ure(None) {
            assert!(c.passed, "{c:?}");
        }
        assert!(small_ure(Some(Sabotage::GammaFactor))
            .iter()
            .any(|c| !c.passed));
    }

    #[test]
    fn explicit_phi_trace_matches_pool() {
        let spec = small_gaussian_spec(3, 5).unwrap();
        let phi = explicit_phi(&spec, 200_000).unwrap();
        let pool = trace_phi(&spec.with_seed(99), 200_000).unwrap();
        assert!((phi.trace() - pool.mean).abs() <= 5.0 * pool.std_err * 2f64.sqrt());
        assert!((&phi - phi.transpose()).norm() <= 1e-12 * phi.norm());
    }
}
