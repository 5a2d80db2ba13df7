//! Projection estimators of a covariance matrix and their selection by
//! unbiased risk estimation.
//!
//! Given `n` zero-mean replicates `x_i ∈ ℝ^p` observed at common design
//! points, the empirical covariance `S = (1/n) Σ x_i x_iᵀ` is projected onto
//! each model space `S(G_m)`, giving `Σ̂_m = Π_m S Π_m`. Every model is scored
//! with
//!
//! ```text
//! URE(m) = ‖S − Σ̂_m‖² + 2 γ̂²_m / n,
//! γ̂²_m  = 1/(n−1) Σ_i ‖Π_m x_i x_iᵀ Π_m − Σ̂_m‖²,
//! ```
//!
//! and the selected model minimizes `URE`. Ties go to the earliest model in
//! the collection.
//!
//! All quantities are computed with `p×p` (or `n×p`) matrices. The
//! `p²×p²` Kronecker forms that appear in the theory are only built in
//! tests.

use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::basis::{DesignMatrix, DesignPoints};
use crate::error::{CovselError, Result};
use crate::io::fmt_f64;
use crate::linalg::{frobenius_norm_sq, project_to_model_space, Mat, SymMat};

/// `n` replicated observation vectors of the process at `p` design points,
/// stored as the rows of an `n×p` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    data: Mat,
    points: DesignPoints,
}

impl SampleSet {
    pub const MIN_REPLICATES: usize = 3;

    pub fn new(data: Mat, points: DesignPoints) -> Result<Self> {
        if data.nrows() < Self::MIN_REPLICATES {
            return Err(CovselError::InvalidSamples(format!(
                "need n >= {}, got {}",
                Self::MIN_REPLICATES,
                data.nrows()
            )));
        }
        if data.ncols() != points.len() {
            return Err(CovselError::InvalidSamples(format!(
                "{} columns for {} design points",
                data.ncols(),
                points.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(CovselError::NonFinite("sample set"));
        }
        Ok(Self { data, points })
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn p(&self) -> usize {
        self.data.ncols()
    }

    /// `n×p`, one replicate per row.
    pub fn data(&self) -> &Mat {
        &self.data
    }

    pub fn points(&self) -> &DesignPoints {
        &self.points
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            data: &self.data * c,
            points: self.points.clone(),
        }
    }

    /// Subtracts the empirical mean from every replicate. The estimators
    /// assume a zero-mean process; centering leaves that setting.
    pub fn centered(&self) -> Self {
        let mut data = self.data.clone();
        for mut col in data.column_iter_mut() {
            let mean = col.mean();
            col.add_scalar_mut(-mean);
        }
        Self {
            data,
            points: self.points.clone(),
        }
    }

    /// Reads CSV with a header row of design points and one replicate per
    /// row.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let points = rdr
            .headers()?
            .iter()
            .map(|h| {
                h.parse::<f64>()
                    .map_err(|_| CovselError::InvalidSamples(format!("bad design point {h:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let points = DesignPoints::new(points)?;
        let mut values = Vec::new();
        let mut n = 0;
        for record in rdr.records() {
            let record = record?;
            for s in record.iter() {
                values.push(
                    s.parse::<f64>()
                        .map_err(|_| CovselError::InvalidSamples(format!("bad value {s:?}")))?,
                );
            }
            n += 1;
        }
        let data = Mat::from_row_slice(n, points.len(), &values);
        Self::new(data, points)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv(std::fs::File::open(path)?)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.points.as_slice().iter().map(|&t| fmt_f64(t)))?;
        for row in self.data.row_iter() {
            w.write_record(row.iter().map(|&x| fmt_f64(x)))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `S = (1/n) Σ x_i x_iᵀ`, without centering.
pub fn empirical_covariance(x: &SampleSet) -> SymMat {
    let s = x.data.tr_mul(&x.data) / x.n() as f64;
    SymMat::symmetrize(&s).expect("XᵀX is square")
}

/// `Σ̂_m = Π_m S Π_m` with the model it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate {
    pub sigma_hat: SymMat,
    pub model: Vec<usize>,
    pub projector_rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelScore {
    pub model: Vec<usize>,
    pub ure: f64,
    pub gamma_sq: f64,
    pub residual_sq: f64,
}

impl ModelScore {
    fn new(model: Vec<usize>, residual_sq: f64, gamma_sq: f64, n: usize) -> Self {
        Self {
            model,
            ure: residual_sq + 2.0 * gamma_sq / n as f64,
            gamma_sq,
            residual_sq,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SelectionResult {
    pub scores: Vec<ModelScore>,
    /// Position of `m̂` in the collection.
    pub selected: usize,
    pub estimate: CovarianceEstimate,
}

#[derive(Debug, Serialize)]
struct SelectionReport<'a> {
    selected_index: usize,
    selected_model: &'a [usize],
    selected_size: usize,
    selected_ure: f64,
    tied_indices: Vec<usize>,
    scores: Vec<ScoreRow<'a>>,
}

#[derive(Debug, Serialize)]
struct ScoreRow<'a> {
    model: &'a [usize],
    size: usize,
    ure: f64,
    gamma_sq: f64,
    residual_sq: f64,
}

impl SelectionResult {
    pub fn selected_score(&self) -> &ModelScore {
        &self.scores[self.selected]
    }

    /// Size of the selected model, `|m̂|`.
    pub fn selected_size(&self) -> usize {
        self.selected_score().model.len()
    }

    /// Collection positions whose score equals the minimum exactly.
    pub fn tied_indices(&self) -> Vec<usize> {
        let best = self.selected_score().ure;
        self.scores
            .iter()
            .enumerate()
            .filter(|(_, s)| s.ure == best)
            .map(|(k, _)| k)
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let sel = self.selected_score();
        let report = SelectionReport {
            selected_index: self.selected,
            selected_model: &sel.model,
            selected_size: sel.model.len(),
            selected_ure: sel.ure,
            tied_indices: self.tied_indices(),
            scores: self
                .scores
                .iter()
                .map(|s| ScoreRow {
                    model: &s.model,
                    size: s.model.len(),
                    ure: s.ure,
                    gamma_sq: s.gamma_sq,
                    residual_sq: s.residual_sq,
                })
                .collect(),
        };
        serde_json::to_value(report).expect("report is plain data")
    }
}

fn check_points(x: &SampleSet, d: &DesignMatrix) -> Result<()> {
    if x.points() != d.points() {
        return Err(CovselError::PointsMismatch);
    }
    Ok(())
}

pub fn sigma_hat(x: &SampleSet, d: &DesignMatrix) -> Result<CovarianceEstimate> {
    check_points(x, d)?;
    estimate_from_s(&empirical_covariance(x), d)
}

fn estimate_from_s(s: &SymMat, d: &DesignMatrix) -> Result<CovarianceEstimate> {
    Ok(CovarianceEstimate {
        sigma_hat: project_to_model_space(s, d.projector())?,
        model: d.model().to_vec(),
        projector_rank: d.projector().rank(),
    })
}

/// `γ̂²_m`, the dispersion of the projected rank-one terms around `Σ̂_m`.
pub fn gamma_hat_sq(x: &SampleSet, d: &DesignMatrix) -> Result<f64> {
    check_points(x, d)?;
    let est = estimate_from_s(&empirical_covariance(x), d)?;
    Ok(gamma_from_estimate(x, d, &est.sigma_hat))
}

// ‖yyᵀ − Σ̂‖² = ‖y‖⁴ − 2 yᵀΣ̂y + ‖Σ̂‖² with y = Πx.
fn gamma_from_estimate(x: &SampleSet, d: &DesignMatrix, sigma_hat: &SymMat) -> f64 {
    let y = x.data() * d.projector().matrix().as_mat();
    let ys = &y * sigma_hat.as_mat();
    let hat_sq = frobenius_norm_sq(sigma_hat);
    let total: f64 = y
        .row_iter()
        .zip(ys.row_iter())
        .map(|(yi, ysi)| {
            let norm_sq = yi.norm_squared();
            norm_sq * norm_sq - 2.0 * yi.dot(&ysi) + hat_sq
        })
        .sum();
    (total / (x.n() - 1) as f64).max(0.0)
}

fn score_from_s(
    x: &SampleSet,
    s: &SymMat,
    d: &DesignMatrix,
) -> Result<(ModelScore, CovarianceEstimate)> {
    check_points(x, d)?;
    let est = estimate_from_s(s, d)?;
    let residual_sq = frobenius_norm_sq(&(s.as_mat() - est.sigma_hat.as_mat()));
    let gamma_sq = gamma_from_estimate(x, d, &est.sigma_hat);
    Ok((
        ModelScore::new(d.model().to_vec(), residual_sq, gamma_sq, x.n()),
        est,
    ))
}

pub fn ure_score(x: &SampleSet, d: &DesignMatrix) -> Result<ModelScore> {
    score_from_s(x, &empirical_covariance(x), d).map(|(score, _)| score)
}

/// Scores every model and returns the `URE` minimizer. Models are scored in
/// parallel; the outcome does not depend on scheduling.
pub fn select_model(x: &SampleSet, collection: &[DesignMatrix]) -> Result<SelectionResult> {
    if collection.is_empty() {
        return Err(CovselError::EmptyCollection);
    }
    let s = empirical_covariance(x);
    let scored = collection
        .par_iter()
        .map(|d| score_from_s(x, &s, d))
        .collect::<Result<Vec<_>>>()?;

    let mut selected = 0;
    for (k, (score, _)) in scored.iter().enumerate() {
        if score.ure < scored[selected].0.ure {
            selected = k;
        }
    }
    let (scores, mut estimates): (Vec<_>, Vec<_>) = scored.into_iter().unzip();
    let estimate = estimates.swap_remove(selected);
    Ok(SelectionResult {
        scores,
        selected,
        estimate,
    })
}
