//! Simulated processes with known covariance and Monte Carlo estimates of
//! the quantities the selection procedure is judged against: the risk curve
//! `R(m) = E‖Σ − Σ̂_m‖²`, the oracle `m₀`, `tr(Φ)` with
//! `Φ = Var(vec(xxᵀ))`, and the oracle inequality for the selected model.
//!
//! Reproducibility
//! ---------------
//! Every random draw comes from a ChaCha8 stream addressed by
//! `(seed, purpose, index)`: replicate `r` of a risk curve always reads the
//! same stream whatever thread runs it. Per-replicate results are collected
//! in order and reduced serially, so serial and parallel runs agree
//! bit-for-bit.
//!
//! `Φ` is never materialized. Its traces are estimated as expectations of
//! `p×p` Frobenius norms, e.g. `tr(Φ) = E‖xxᵀ − Σ‖²`.

use nalgebra::{DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use rayon::prelude::*;
use serde::Serialize;

use crate::basis::{basis_matrix, BasisFamily, DesignMatrix, DesignPoints};
use crate::covest::{select_model, SampleSet};
use crate::error::{CovselError, Result};
use crate::io::fmt_f64;
use crate::linalg::{frobenius_norm_sq, Mat, SymMat};

const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// Minimum replicate count for [`mc_risk_curve`].
pub const MIN_RISK_REPS: usize = 100;
/// Minimum pool size for [`trace_phi`].
pub const MIN_TRACE_POOL: usize = 10_000;
/// Minimum replicate count for [`verify_oracle_inequality`].
pub const MIN_ORACLE_REPS: usize = 500;
/// Single-draw pool used for variance terms unless overridden.
pub const DEFAULT_POOL: usize = 100_000;

const POOL_CHUNK: usize = 1_000;

/// Purpose tags keeping the random streams of different estimates apart.
#[derive(Debug, Clone, Copy)]
#[repr(u64)]
pub enum Stream {
    Sample = 1,
    Replicate = 2,
    VariancePool = 3,
    TracePool = 4,
    Check = 5,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent generator for `(seed, purpose, index)`.
pub fn stream_rng(seed: u64, purpose: Stream, index: u64) -> ChaCha8Rng {
    let key = splitmix64(seed ^ splitmix64(purpose as u64));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(index);
    rng
}

/// Law of the standardized random coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CoefficientLaw {
    Gaussian,
    /// Uniform on `[−√3, √3]`: mean 0, variance 1.
    Uniform,
}

impl CoefficientLaw {
    fn draw<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            Self::Gaussian => StandardNormal.sample(rng),
            Self::Uniform => Uniform::new_inclusive(-SQRT_3, SQRT_3)
                .expect("finite bounds")
                .sample(rng),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProcessKind {
    /// `X(t) = Σ_{λ ≤ m*} scale_λ · ξ_λ · g_λ(t)` with standardized `ξ_λ`.
    Basis {
        basis: BasisFamily,
        scales: Vec<f64>,
        law: CoefficientLaw,
    },
    /// Brownian bridge, `K(s, t) = min(s,t)·(1 − max(s,t))`.
    BrownianBridge,
    /// Centered Gaussian vector with a given covariance.
    Gaussian { sigma: SymMat },
}

/// Generative description of a zero-mean process observed at fixed points.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessSpec {
    pub kind: ProcessKind,
    pub points: DesignPoints,
    pub seed: u64,
}

impl ProcessSpec {
    /// Gaussian coefficients with variances `V(a_λ)`, `λ = 1..=m*`.
    pub fn basis_gaussian(
        basis: BasisFamily,
        points: DesignPoints,
        variances: &[f64],
        seed: u64,
    ) -> Result<Self> {
        if variances.is_empty() {
            return Err(CovselError::InvalidProcess(
                "truncation m* must be >= 1".into(),
            ));
        }
        if let Some(v) = variances.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(CovselError::InvalidProcess(format!(
                "variance {v} is not positive"
            )));
        }
        Ok(Self {
            kind: ProcessKind::Basis {
                basis,
                scales: variances.iter().map(|v| v.sqrt()).collect(),
                law: CoefficientLaw::Gaussian,
            },
            points,
            seed,
        })
    }

    /// Coefficients `ζ_λ·a_λ` with `a_λ` uniform on `[−√3, √3]`.
    pub fn basis_uniform(
        basis: BasisFamily,
        points: DesignPoints,
        weights: &[f64],
        seed: u64,
    ) -> Result<Self> {
        if weights.is_empty() {
            return Err(CovselError::InvalidProcess(
                "truncation m* must be >= 1".into(),
            ));
        }
        if let Some(w) = weights.iter().find(|w| !(**w != 0.0 && w.is_finite())) {
            return Err(CovselError::InvalidProcess(format!(
                "weight {w} must be non-zero"
            )));
        }
        Ok(Self {
            kind: ProcessKind::Basis {
                basis,
                scales: weights.to_vec(),
                law: CoefficientLaw::Uniform,
            },
            points,
            seed,
        })
    }

    pub fn brownian_bridge(points: DesignPoints, seed: u64) -> Self {
        Self {
            kind: ProcessKind::BrownianBridge,
            points,
            seed,
        }
    }

    pub fn gaussian(sigma: SymMat, points: DesignPoints, seed: u64) -> Result<Self> {
        if sigma.dim() != points.len() {
            return Err(CovselError::ShapeMismatch(format!(
                "covariance of dim {} for {} points",
                sigma.dim(),
                points.len()
            )));
        }
        Ok(Self {
            kind: ProcessKind::Gaussian { sigma },
            points,
            seed,
        })
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    pub fn p(&self) -> usize {
        self.points.len()
    }

    /// Factors the process once so that draws are `x = L·ξ`.
    pub fn prepare(&self) -> Result<PreparedProcess> {
        let (loading, law, sigma) = match &self.kind {
            ProcessKind::Basis { basis, scales, law } => {
                let model: Vec<usize> = (1..=scales.len()).collect();
                let mut loading = basis_matrix(basis, &model, &self.points)?;
                for (mut col, &s) in loading.column_iter_mut().zip(scales) {
                    col.scale_mut(s);
                }
                let sigma = SymMat::symmetrize(&(&loading * loading.transpose()))?;
                (loading, *law, sigma)
            }
            ProcessKind::BrownianBridge => {
                let sigma = brownian_bridge_covariance(&self.points);
                (psd_factor(&sigma)?, CoefficientLaw::Gaussian, sigma)
            }
            ProcessKind::Gaussian { sigma } => {
                (psd_factor(sigma)?, CoefficientLaw::Gaussian, sigma.clone())
            }
        };
        Ok(PreparedProcess {
            loading,
            law,
            sigma,
            points: self.points.clone(),
        })
    }
}

fn brownian_bridge_covariance(points: &DesignPoints) -> SymMat {
    let t = points.as_slice();
    let p = t.len();
    let k = Mat::from_fn(p, p, |i, j| t[i].min(t[j]) * (1.0 - t[i].max(t[j])));
    SymMat::symmetrize(&k).expect("square")
}

/// `L` with `LLᵀ = Σ` from a symmetric eigendecomposition. Eigenvalues
/// slightly below zero are clipped; clearly negative ones are rejected.
fn psd_factor(sigma: &SymMat) -> Result<Mat> {
    let eig = SymmetricEigen::new(sigma.as_mat().clone());
    let floor = -1e-10 * sigma.amax().max(1.0);
    let min = eig.eigenvalues.min();
    if min < floor {
        return Err(CovselError::InvalidProcessCovariance(min));
    }
    let mut l = eig.eigenvectors;
    for (mut col, &w) in l.column_iter_mut().zip(eig.eigenvalues.iter()) {
        col.scale_mut(w.max(0.0).sqrt());
    }
    Ok(l)
}

/// A process ready to draw from.
#[derive(Debug, Clone)]
pub struct PreparedProcess {
    loading: Mat,
    law: CoefficientLaw,
    sigma: SymMat,
    points: DesignPoints,
}

impl PreparedProcess {
    pub fn sigma(&self) -> &SymMat {
        &self.sigma
    }

    /// `p×k` loading `L`, draws are `x = Lξ`.
    pub fn loading(&self) -> &Mat {
        &self.loading
    }

    pub fn law(&self) -> CoefficientLaw {
        self.law
    }

    pub fn points(&self) -> &DesignPoints {
        &self.points
    }

    pub fn p(&self) -> usize {
        self.loading.nrows()
    }

    /// `n×p` matrix of independent draws, one per row.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Mat {
        let k = self.loading.ncols();
        let xi: Vec<f64> = (0..n * k).map(|_| self.law.draw(rng)).collect();
        let xi = Mat::from_row_slice(n, k, &xi);
        xi * self.loading.transpose()
    }

    /// A single draw.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let k = self.loading.ncols();
        let xi = DVector::from_iterator(k, (0..k).map(|_| self.law.draw(rng)));
        &self.loading * xi
    }

    pub fn sample_set<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<SampleSet> {
        SampleSet::new(self.sample(n, rng), self.points.clone())
    }
}

/// The covariance matrix `Σ` of the process at its design points.
pub fn true_sigma(spec: &ProcessSpec) -> Result<SymMat> {
    match &spec.kind {
        ProcessKind::BrownianBridge => Ok(brownian_bridge_covariance(&spec.points)),
        ProcessKind::Gaussian { sigma } => Ok(sigma.clone()),
        ProcessKind::Basis { .. } => Ok(spec.prepare()?.sigma),
    }
}

/// `n` i.i.d. replicates, deterministic in `spec.seed`.
pub fn simulate(spec: &ProcessSpec, n: usize) -> Result<SampleSet> {
    if n < SampleSet::MIN_REPLICATES {
        return Err(CovselError::InvalidSamples(format!("need n >= 3, got {n}")));
    }
    let prepared = spec.prepare()?;
    prepared.sample_set(n, &mut stream_rng(spec.seed, Stream::Sample, 0))
}

/// Orthonormal basis `Q` of a projector's range together with `QᵀΣQ`.
///
/// For `y = Qᵀx` and `A = QᵀΣQ`, `‖Π(xxᵀ − Σ)Π‖² = ‖yyᵀ − A‖²`, which costs
/// `O(p·r)` instead of `O(p²)`.
#[derive(Debug, Clone)]
pub(crate) struct RangeBasis {
    q: Mat,
    sigma_in: Mat,
    sigma_in_sq: f64,
}

impl RangeBasis {
    pub(crate) fn new(d: &DesignMatrix, sigma: &SymMat) -> Self {
        let proj = d.projector();
        let eig = SymmetricEigen::new(proj.matrix().as_mat().clone());
        let mut order: Vec<usize> = (0..proj.dim()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let cols: Vec<_> = order[..proj.rank()]
            .iter()
            .map(|&k| eig.eigenvectors.column(k).into_owned())
            .collect();
        let q = if cols.is_empty() {
            Mat::zeros(proj.dim(), 0)
        } else {
            Mat::from_columns(&cols)
        };
        let sigma_in = q.tr_mul(sigma.as_mat()) * &q;
        let sigma_in_sq = frobenius_norm_sq(&sigma_in);
        Self {
            q,
            sigma_in,
            sigma_in_sq,
        }
    }

    /// `‖Π(xxᵀ − Σ)Π‖²`
    fn projected_dispersion(&self, x: &DVector<f64>) -> f64 {
        let y = self.q.tr_mul(x);
        let ny = y.norm_squared();
        (ny * ny - 2.0 * (&self.sigma_in * &y).dot(&y) + self.sigma_in_sq).max(0.0)
    }

    /// `‖Σ − ΠSΠ‖²` given `‖Σ‖²`.
    pub(crate) fn loss(&self, s: &Mat, sigma_sq: f64) -> f64 {
        let s_in = self.q.tr_mul(s) * &self.q;
        (sigma_sq - 2.0 * self.sigma_in.dot(&s_in) + frobenius_norm_sq(&s_in)).max(0.0)
    }
}

/// Mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub count: usize,
}

impl MeanEstimate {
    pub fn from_samples(values: &[f64]) -> Self {
        let mut acc = Accumulator::default();
        for &v in values {
            acc.push(v);
        }
        acc.finish()
    }
}

/// Running sums, merged in a fixed order.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Accumulator {
    n: usize,
    sum: f64,
    sum_sq: f64,
}

impl Accumulator {
    pub(crate) fn push(&mut self, v: f64) {
        self.n += 1;
        self.sum += v;
        self.sum_sq += v * v;
    }

    pub(crate) fn merge(&mut self, other: &Self) {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub(crate) fn finish(&self) -> MeanEstimate {
        let n = self.n as f64;
        let mean = self.sum / n;
        let var = if self.n > 1 {
            ((self.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        MeanEstimate {
            mean,
            std_err: (var / n).sqrt(),
            count: self.n,
        }
    }
}

/// Per-draw Monte Carlo over a pool split into fixed chunks. Chunk `c` reads
/// stream `(seed, purpose, c)`.
fn pooled<F>(
    prepared: &PreparedProcess,
    seed: u64,
    purpose: Stream,
    pool: usize,
    width: usize,
    f: F,
) -> Vec<MeanEstimate>
where
    F: Fn(&DVector<f64>, &mut [f64]) + Sync,
{
    let chunks = pool.div_ceil(POOL_CHUNK);
    let partials: Vec<Vec<Accumulator>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, purpose, c as u64);
            let len = POOL_CHUNK.min(pool - c * POOL_CHUNK);
            let mut accs = vec![Accumulator::default(); width];
            let mut out = vec![0.0; width];
            for _ in 0..len {
                let x = prepared.draw(&mut rng);
                f(&x, &mut out);
                for (acc, &v) in accs.iter_mut().zip(&out) {
                    acc.push(v);
                }
            }
            accs
        })
        .collect();
    let mut total = vec![Accumulator::default(); width];
    for part in &partials {
        for (t, a) in total.iter_mut().zip(part) {
            t.merge(a);
        }
    }
    total.iter().map(Accumulator::finish).collect()
}

/// Monte Carlo estimate of `tr(Φ) = E‖xxᵀ − Σ‖²`.
pub fn trace_phi(spec: &ProcessSpec, pool: usize) -> Result<MeanEstimate> {
    if pool < MIN_TRACE_POOL {
        return Err(CovselError::RepsTooSmall {
            got: pool,
            min: MIN_TRACE_POOL,
        });
    }
    let prepared = spec.prepare()?;
    Ok(trace_phi_prepared(&prepared, spec.seed, pool))
}

fn trace_phi_prepared(prepared: &PreparedProcess, seed: u64, pool: usize) -> MeanEstimate {
    let sigma = prepared.sigma().as_mat();
    let sigma_sq = frobenius_norm_sq(sigma);
    pooled(prepared, seed, Stream::TracePool, pool, 1, |x, out| {
        let nx = x.norm_squared();
        out[0] = (nx * nx - 2.0 * (sigma * x).dot(x) + sigma_sq).max(0.0);
    })[0]
}

/// Monte Carlo risk curve of a model collection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskCurve {
    /// Model sizes `|m|`, in collection order.
    pub models: Vec<usize>,
    /// Mean of `‖Σ − Σ̂_m‖²` over replicates.
    pub risk: Vec<f64>,
    pub std_err: Vec<f64>,
    /// `‖Σ − Π_m Σ Π_m‖²`, exact.
    pub bias_sq: Vec<f64>,
    /// Estimate of `tr((Π_m⊗Π_m)Φ)/n` from an independent pool.
    pub variance_term: Vec<f64>,
    pub variance_std_err: Vec<f64>,
    pub reps: usize,
    pub pool: usize,
    pub n: usize,
}

impl RiskCurve {
    /// `risk − bias_sq − variance_term` per model.
    pub fn decomposition_gaps(&self) -> Vec<f64> {
        (0..self.models.len())
            .map(|k| self.risk[k] - self.bias_sq[k] - self.variance_term[k])
            .collect()
    }

    /// Standard error of each gap (risk and pool errors combined).
    pub fn gap_std_errs(&self) -> Vec<f64> {
        self.std_err
            .iter()
            .zip(&self.variance_std_err)
            .map(|(a, b)| a.hypot(*b))
            .collect()
    }

    /// Whether every gap lies within `k_sigma` standard errors.
    pub fn satisfies_decomposition(&self, k_sigma: f64) -> bool {
        self.decomposition_gaps()
            .iter()
            .zip(self.gap_std_errs())
            .all(|(g, se)| g.abs() <= k_sigma * se)
    }

    /// CSV with columns `m,risk,std_err,bias_sq,variance_term`.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["m", "risk", "std_err", "bias_sq", "variance_term"])?;
        for k in 0..self.models.len() {
            w.write_record([
                self.models[k].to_string(),
                fmt_f64(self.risk[k]),
                fmt_f64(self.std_err[k]),
                fmt_f64(self.bias_sq[k]),
                fmt_f64(self.variance_term[k]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Options for [`mc_risk_curve_with`].
#[derive(Debug, Clone, Copy)]
pub struct McOptions {
    pub reps: usize,
    pub pool: usize,
}

impl McOptions {
    pub fn new(reps: usize) -> Self {
        Self {
            reps,
            pool: DEFAULT_POOL,
        }
    }
}

pub fn mc_risk_curve(
    spec: &ProcessSpec,
    collection: &[DesignMatrix],
    n: usize,
    reps: usize,
) -> Result<RiskCurve> {
    mc_risk_curve_with(spec, collection, n, McOptions::new(reps))
}

pub fn mc_risk_curve_with(
    spec: &ProcessSpec,
    collection: &[DesignMatrix],
    n: usize,
    opts: McOptions,
) -> Result<RiskCurve> {
    if opts.reps < MIN_RISK_REPS {
        return Err(CovselError::RepsTooSmall {
            got: opts.reps,
            min: MIN_RISK_REPS,
        });
    }
    if collection.is_empty() {
        return Err(CovselError::EmptyCollection);
    }
    if n < SampleSet::MIN_REPLICATES {
        return Err(CovselError::InvalidSamples(format!("need n >= 3, got {n}")));
    }
    if collection.iter().any(|d| d.points() != &spec.points) {
        return Err(CovselError::PointsMismatch);
    }
    let prepared = spec.prepare()?;
    let sigma = prepared.sigma().clone();
    let ranges: Vec<RangeBasis> = collection
        .iter()
        .map(|d| RangeBasis::new(d, &sigma))
        .collect();

    let losses = replicate_losses(&prepared, &ranges, spec.seed, n, opts.reps);
    let mut risk_acc = vec![Accumulator::default(); ranges.len()];
    for row in &losses {
        for (acc, &v) in risk_acc.iter_mut().zip(row) {
            acc.push(v);
        }
    }
    let risk: Vec<MeanEstimate> = risk_acc.iter().map(Accumulator::finish).collect();

    let variance = pooled(
        &prepared,
        spec.seed,
        Stream::VariancePool,
        opts.pool,
        ranges.len(),
        |x, out| {
            for (o, r) in out.iter_mut().zip(&ranges) {
                *o = r.projected_dispersion(x);
            }
        },
    );

    let nf = n as f64;
    Ok(RiskCurve {
        models: collection.iter().map(DesignMatrix::size).collect(),
        risk: risk.iter().map(|e| e.mean).collect(),
        std_err: risk.iter().map(|e| e.std_err).collect(),
        bias_sq: collection.iter().map(|d| bias_sq(&sigma, d)).collect(),
        variance_term: variance.iter().map(|e| e.mean / nf).collect(),
        variance_std_err: variance.iter().map(|e| e.std_err / nf).collect(),
        reps: opts.reps,
        pool: opts.pool,
        n,
    })
}

/// `‖Σ − ΠΣΠ‖²`
pub fn bias_sq(sigma: &SymMat, d: &DesignMatrix) -> f64 {
    let pi = d.projector().matrix().as_mat();
    frobenius_norm_sq(&(sigma.as_mat() - pi * sigma.as_mat() * pi))
}

/// `‖Σ − Σ̂_m‖²` for every model, one row per replicate. Replicate `r`
/// draws its `n` samples from stream `(seed, Replicate, r)`.
pub(crate) fn replicate_losses(
    prepared: &PreparedProcess,
    ranges: &[RangeBasis],
    seed: u64,
    n: usize,
    reps: usize,
) -> Vec<Vec<f64>> {
    let sigma_sq = frobenius_norm_sq(prepared.sigma());
    (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, Stream::Replicate, r as u64);
            let x = prepared.sample(n, &mut rng);
            let s = x.tr_mul(&x) / n as f64;
            ranges.iter().map(|rb| rb.loss(&s, sigma_sq)).collect()
        })
        .collect()
}

/// Size of the model with smallest risk; ties go to the earliest entry.
pub fn oracle_model(curve: &RiskCurve) -> usize {
    curve.models[oracle_index(curve)]
}

/// Position of the smallest risk in the curve.
pub fn oracle_index(curve: &RiskCurve) -> usize {
    let mut best = 0;
    for (k, &r) in curve.risk.iter().enumerate() {
        if r < curve.risk[best] {
            best = k;
        }
    }
    best
}

/// `(1 + 1/A)·inf_m R(m) + (4 + A)·tr(Φ)/n`
pub fn oracle_bound(inf_risk: f64, trace_phi: f64, n: usize, a: f64) -> f64 {
    (1.0 + 1.0 / a) * inf_risk + (4.0 + a) * trace_phi / n as f64
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleInequalityReport {
    pub a: f64,
    pub n: usize,
    pub reps: usize,
    /// Mean of `‖Σ̂_{m̂} − Σ‖²`.
    pub lhs: f64,
    pub lhs_std_err: f64,
    pub inf_risk: f64,
    pub inf_risk_std_err: f64,
    pub oracle_model: usize,
    pub trace_phi: f64,
    pub trace_phi_std_err: f64,
    pub rhs: f64,
    pub combined_std_err: f64,
    /// `lhs ≤ rhs + 3·combined_std_err`
    pub holds: bool,
}

/// Checks `E‖Σ̂_{m̂} − Σ‖² ≤ (1 + 1/A) inf_m R(m) + (4 + A) tr(Φ)/n` by
/// Monte Carlo. The selected model is re-chosen by URE in every replicate.
pub fn verify_oracle_inequality(
    spec: &ProcessSpec,
    collection: &[DesignMatrix],
    n: usize,
    reps: usize,
    a: f64,
) -> Result<OracleInequalityReport> {
    if reps < MIN_ORACLE_REPS {
        return Err(CovselError::RepsTooSmall {
            got: reps,
            min: MIN_ORACLE_REPS,
        });
    }
    if a.is_nan() || a <= 0.0 {
        return Err(CovselError::Config(format!("A must be positive, got {a}")));
    }
    let curve = mc_risk_curve(spec, collection, n, reps)?;
    let prepared = spec.prepare()?;
    let sigma = prepared.sigma().as_mat().clone();

    let selected_losses = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(spec.seed, Stream::Replicate, r as u64);
            let x = prepared.sample_set(n, &mut rng)?;
            let sel = select_model(&x, collection)?;
            Ok(frobenius_norm_sq(
                &(sel.estimate.sigma_hat.as_mat() - &sigma),
            ))
        })
        .collect::<Result<Vec<f64>>>()?;
    let lhs = MeanEstimate::from_samples(&selected_losses);
    let tphi = trace_phi_prepared(&prepared, spec.seed, DEFAULT_POOL);

    let best = oracle_index(&curve);
    let inf_risk = curve.risk[best];
    let inf_se = curve.std_err[best];
    let rhs = oracle_bound(inf_risk, tphi.mean, n, a);
    let combined = (lhs.std_err.powi(2)
        + ((1.0 + 1.0 / a) * inf_se).powi(2)
        + ((4.0 + a) * tphi.std_err / n as f64).powi(2))
    .sqrt();
    Ok(OracleInequalityReport {
        a,
        n,
        reps,
        lhs: lhs.mean,
        lhs_std_err: lhs.std_err,
        inf_risk,
        inf_risk_std_err: inf_se,
        oracle_model: curve.models[best],
        trace_phi: tphi.mean,
        trace_phi_std_err: tphi.std_err,
        rhs,
        combined_std_err: combined,
        holds: lhs.mean <= rhs + 3.0 * combined,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{equispaced_points, nested_collection, GridConvention};

    #[test]
    fn bridge_covariance_at_three_points() {
        let spec = ProcessSpec::brownian_bridge(equispaced_points(3).unwrap(), 0);
        let sigma = true_sigma(&spec).unwrap();
        let want = Mat::from_row_slice(3, 3, &[0., 0., 0., 0., 0.25, 0., 0., 0., 0.]);
        assert_eq!(sigma.as_mat(), &want);
    }

    #[test]
    fn single_cosine_term_at_zero() {
        let pts = crate::basis::DesignPoints::new(vec![0.0]).unwrap();
        let spec = ProcessSpec::basis_uniform(BasisFamily::Cosine, pts, &[1.0], 0).unwrap();
        assert_eq!(
            true_sigma(&spec).unwrap().as_mat(),
            &Mat::from_element(1, 1, 1.0)
        );
    }

    fn kl_partial_sum(t: &[f64], terms: usize) -> Mat {
        use std::f64::consts::{PI, SQRT_2};
        let p = t.len();
        let mut kl = Mat::zeros(p, p);
        for l in 1..=terms {
            let nu = 1.0 / (l as f64 * PI).powi(2);
            let g: Vec<f64> = t
                .iter()
                .map(|&s| SQRT_2 * (l as f64 * PI * s).sin())
                .collect();
            for i in 0..p {
                for j in 0..p {
                    kl[(i, j)] += nu * g[i] * g[j];
                }
            }
        }
        kl
    }

    #[test]
    fn bridge_truth_matches_kl_partial_sum() {
        let pts = equispaced_points(35).unwrap();
        let truth = true_sigma(&ProcessSpec::brownian_bridge(pts.clone(), 0)).unwrap();
        // the dropped tail is at most Σ_{λ>L} 2/(λπ)² < 2/(π²L)
        for terms in [500, 2000] {
            let err = (truth.as_mat() - kl_partial_sum(pts.as_slice(), terms)).amax();
            let tail = 2.0 / (std::f64::consts::PI.powi(2) * terms as f64);
            assert!(err <= tail, "{terms}: {err}");
        }
        let err = (truth.as_mat() - kl_partial_sum(pts.as_slice(), 2000)).amax();
        assert!(err <= 1e-4);
    }

    #[test]
    fn invalid_specs_rejected() {
        let pts = equispaced_points(3).unwrap();
        assert!(
            ProcessSpec::basis_gaussian(BasisFamily::Cosine, pts.clone(), &[1.0, 0.0], 0).is_err()
        );
        assert!(ProcessSpec::basis_gaussian(BasisFamily::Cosine, pts.clone(), &[], 0).is_err());
        assert!(ProcessSpec::basis_uniform(BasisFamily::Cosine, pts.clone(), &[0.0], 0).is_err());

        let neg =
            SymMat::new(Mat::from_diagonal(&DVector::from_vec(vec![1.0, -0.5, 1.0]))).unwrap();
        let spec = ProcessSpec::gaussian(neg, pts.clone(), 0).unwrap();
        let err = simulate(&spec, 5).unwrap_err();
        assert!(err.to_string().starts_with("invalid process covariance"));
        assert!(ProcessSpec::gaussian(SymMat::identity(2), pts.clone(), 0).is_err());
        assert!(simulate(&ProcessSpec::brownian_bridge(pts, 0), 2).is_err());
    }

    #[test]
    fn simulation_is_deterministic() {
        let spec = ProcessSpec::brownian_bridge(equispaced_points(9).unwrap(), 17);
        let a = simulate(&spec, 20).unwrap();
        let b = simulate(&spec, 20).unwrap();
        let bits = |s: &SampleSet| s.data().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        assert_ne!(bits(&a), bits(&simulate(&spec.with_seed(18), 20).unwrap()));
    }

    #[test]
    fn orthonormal_design_recovers_coefficients() {
        let p = 35;
        let pts = crate::basis::equispaced_points_with(p, GridConvention::Left).unwrap();
        let basis = BasisFamily::fourier_scaled(p).unwrap();
        let spec =
            ProcessSpec::basis_gaussian(basis.clone(), pts.clone(), &vec![1.0; p], 3).unwrap();
        let prepared = spec.prepare().unwrap();
        let g = basis_matrix(&basis, &(1..=p).collect::<Vec<_>>(), &pts).unwrap();
        let mut rng = stream_rng(3, Stream::Check, 0);
        let xi = DVector::from_iterator(p, (0..p).map(|_| StandardNormal.sample(&mut rng)));
        let x = prepared.loading() * &xi;
        assert!((g.tr_mul(&x) - xi).amax() < 1e-10);
        // with V ≡ 1 the process covariance is then the identity
        assert!((prepared.sigma().as_mat() - Mat::identity(p, p)).amax() < 1e-10);
    }

    #[test]
    fn range_basis_matches_direct_formulas() {
        let pts = equispaced_points(7).unwrap();
        let spec = ProcessSpec::brownian_bridge(pts.clone(), 5);
        let prepared = spec.prepare().unwrap();
        let sigma = prepared.sigma().clone();
        let mut rng = stream_rng(5, Stream::Check, 1);
        for d in nested_collection(&BasisFamily::BrownianBridgeKl, 5, &pts).unwrap() {
            let rb = RangeBasis::new(&d, &sigma);
            let pi = d.projector().matrix().as_mat();
            let x = prepared.draw(&mut rng);
            let direct = frobenius_norm_sq(&(pi * (&x * x.transpose() - sigma.as_mat()) * pi));
            assert!((rb.projected_dispersion(&x) - direct).abs() <= 1e-12 * direct.max(1e-3));

            let xs = prepared.sample(10, &mut rng);
            let s = xs.tr_mul(&xs) / 10.0;
            let direct = frobenius_norm_sq(&(sigma.as_mat() - pi * &s * pi));
            let fast = rb.loss(&s, frobenius_norm_sq(&sigma));
            assert!((fast - direct).abs() <= 1e-12 * direct.max(1e-3));
        }
    }

    #[test]
    fn oracle_model_picks_first_minimum() {
        let curve = RiskCurve {
            models: vec![1, 2, 3],
            risk: vec![3.0, 2.0, 1.0],
            std_err: vec![0.0; 3],
            bias_sq: vec![0.0; 3],
            variance_term: vec![0.0; 3],
            variance_std_err: vec![0.0; 3],
            reps: 100,
            pool: 0,
            n: 10,
        };
        assert_eq!(oracle_model(&curve), 3);
        let tied = RiskCurve {
            risk: vec![2.0, 1.0, 1.0],
            ..curve
        };
        assert_eq!(oracle_model(&tied), 2);
    }

    #[test]
    fn bound_arithmetic() {
        let (inf_r, tphi, n) = (0.8, 3.0, 10);
        let diff = oracle_bound(inf_r, tphi, n, 10.0) - oracle_bound(inf_r, tphi, n, 1.0);
        assert!((diff - (9.0 * tphi / n as f64 - 0.9 * inf_r)).abs() < 1e-12);
    }

    #[test]
    fn preconditions() {
        let pts = equispaced_points(4).unwrap();
        let spec = ProcessSpec::brownian_bridge(pts.clone(), 0);
        let coll = nested_collection(&BasisFamily::BrownianBridgeKl, 2, &pts).unwrap();
        let err = mc_risk_curve(&spec, &coll, 10, 99).unwrap_err();
        assert!(err.to_string().starts_with("reps too small"));
        assert!(mc_risk_curve(&spec, &[], 10, 100).is_err());
        assert!(trace_phi(&spec, 9_999).is_err());
        assert!(verify_oracle_inequality(&spec, &coll, 10, 499, 1.0).is_err());
        assert!(verify_oracle_inequality(&spec, &coll, 10, 500, 0.0).is_err());
        let other =
            nested_collection(&BasisFamily::Cosine, 2, &equispaced_points(5).unwrap()).unwrap();
        assert!(matches!(
            mc_risk_curve(&spec, &other, 10, 100),
            Err(CovselError::PointsMismatch)
        ));
    }
}
