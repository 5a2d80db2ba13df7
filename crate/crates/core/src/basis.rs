//! Basis families on `[0, 1]`, design points and design matrices
//! `(G_m)_{jλ} = g_λ(t_j)` with their cached projectors.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{CovselError, Result};
use crate::linalg::{projector, Mat, Projector};

/// How `p` equispaced points are laid out in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridConvention {
    /// `t_j = (j-1)/(p-1)`, both endpoints included.
    #[default]
    Endpoint,
    /// `t_j = j/(p+1)`.
    Interior,
    /// `t_j = (j-1)/p`, the periodic grid.
    Left,
}

impl FromStr for GridConvention {
    type Err = CovselError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "endpoint" => Ok(Self::Endpoint),
            "interior" => Ok(Self::Interior),
            "left" => Ok(Self::Left),
            other => Err(CovselError::Config(format!(
                "unknown grid convention {other:?}"
            ))),
        }
    }
}

impl fmt::Display for GridConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Endpoint => "endpoint",
            Self::Interior => "interior",
            Self::Left => "left",
        })
    }
}

/// Strictly increasing observation points in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignPoints(Vec<f64>);

impl DesignPoints {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(CovselError::InvalidPoints("no points".into()));
        }
        if let Some(bad) = points.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return Err(CovselError::InvalidPoints(format!(
                "{bad} is outside [0, 1]"
            )));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CovselError::InvalidPoints(
                "points must be strictly increasing".into(),
            ));
        }
        Ok(Self(points))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Equispaced points with the default endpoint convention.
pub fn equispaced_points(p: usize) -> Result<DesignPoints> {
    equispaced_points_with(p, GridConvention::Endpoint)
}

pub fn equispaced_points_with(p: usize, grid: GridConvention) -> Result<DesignPoints> {
    if p < 2 {
        return Err(CovselError::InvalidPoints(format!(
            "need at least 2 points, got {p}"
        )));
    }
    let pf = p as f64;
    let points = (0..p)
        .map(|j| {
            let j = j as f64;
            match grid {
                GridConvention::Endpoint => j / (pf - 1.0),
                GridConvention::Interior => (j + 1.0) / (pf + 1.0),
                GridConvention::Left => j / pf,
            }
        })
        .collect();
    DesignPoints::new(points)
}

/// Basis functions tabulated at fixed design points, loaded from CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct CustomBasis {
    points: Vec<f64>,
    /// `values[λ-1][j] = g_λ(t_j)`
    values: Vec<Vec<f64>>,
}

impl CustomBasis {
    pub fn new(points: DesignPoints, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.is_empty() {
            return Err(CovselError::InvalidBasis(
                "custom basis has no functions".into(),
            ));
        }
        for (k, row) in values.iter().enumerate() {
            if row.len() != points.len() {
                return Err(CovselError::InvalidBasis(format!(
                    "function {} has {} values for {} points",
                    k + 1,
                    row.len(),
                    points.len()
                )));
            }
            if row.iter().any(|x| !x.is_finite()) {
                return Err(CovselError::NonFinite("custom basis"));
            }
        }
        Ok(Self {
            points: points.0,
            values,
        })
    }

    /// Reads the CSV layout `lambda,t_1,...,t_p` followed by one row per
    /// function. Rows must list `λ = 1, 2, ...` in order.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.len() < 2 || &headers[0] != "lambda" {
            return Err(CovselError::InvalidBasis(
                "header must be `lambda` followed by the design points".into(),
            ));
        }
        let points = headers
            .iter()
            .skip(1)
            .map(|h| {
                h.parse::<f64>()
                    .map_err(|_| CovselError::InvalidBasis(format!("bad design point {h:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut values = Vec::new();
        for (k, record) in rdr.records().enumerate() {
            let record = record?;
            let lambda: usize = record[0]
                .parse()
                .map_err(|_| CovselError::InvalidBasis(format!("bad lambda {:?}", &record[0])))?;
            if lambda != k + 1 {
                return Err(CovselError::InvalidBasis(format!(
                    "expected lambda {} on row {}, found {lambda}",
                    k + 1,
                    k + 1
                )));
            }
            let row = record
                .iter()
                .skip(1)
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| CovselError::InvalidBasis(format!("bad value {s:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            values.push(row);
        }
        Self::new(DesignPoints::new(points)?, values)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv(std::fs::File::open(path)?)
    }

    pub fn points(&self) -> DesignPoints {
        DesignPoints(self.points.clone())
    }

    /// Number of tabulated functions.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn eval(&self, lambda: usize, t: f64) -> Result<f64> {
        let row = self.values.get(lambda - 1).ok_or_else(|| {
            CovselError::InvalidBasis(format!("custom basis has no function {lambda}"))
        })?;
        let j = self
            .points
            .iter()
            .position(|&s| (s - t).abs() <= 1e-12)
            .ok_or_else(|| {
                CovselError::InvalidBasis(format!("custom basis is not tabulated at t = {t}"))
            })?;
        Ok(row[j])
    }
}

/// A family `(g_λ)_{λ ≥ 1}` of functions on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub enum BasisFamily {
    /// Trigonometric basis scaled by `1/√p_scale`: constant, then
    /// alternating cosines and sines of increasing frequency.
    FourierScaled {
        p_scale: usize,
    },
    /// `cos(λπt)`.
    Cosine,
    /// `√2·sin(λπt)`, the Karhunen–Loève functions of the Brownian bridge.
    BrownianBridgeKl,
    Custom(Arc<CustomBasis>),
}

impl BasisFamily {
    pub fn fourier_scaled(p_scale: usize) -> Result<Self> {
        if p_scale == 0 {
            return Err(CovselError::InvalidBasis(
                "fourier_scaled requires p_scale >= 1".into(),
            ));
        }
        Ok(Self::FourierScaled { p_scale })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::FourierScaled { .. } => "fourier_scaled",
            Self::Cosine => "cosine",
            Self::BrownianBridgeKl => "brownian_bridge_kl",
            Self::Custom(_) => "custom",
        }
    }
}

/// Evaluates `g_λ(t)`; `λ` is one based.
pub fn eval_basis(basis: &BasisFamily, lambda: usize, t: f64) -> Result<f64> {
    if lambda == 0 {
        return Err(CovselError::ZeroIndex);
    }
    let l = lambda as f64;
    match basis {
        BasisFamily::FourierScaled { p_scale } => {
            if *p_scale == 0 {
                return Err(CovselError::InvalidBasis(
                    "fourier_scaled requires p_scale >= 1".into(),
                ));
            }
            let scale = 1.0 / (*p_scale as f64).sqrt();
            Ok(if lambda == 1 {
                scale
            } else if lambda.is_multiple_of(2) {
                SQRT_2 * scale * (2.0 * PI * (l / 2.0) * t).cos()
            } else {
                SQRT_2 * scale * (2.0 * PI * ((l - 1.0) / 2.0) * t).sin()
            })
        }
        BasisFamily::Cosine => Ok((l * PI * t).cos()),
        BasisFamily::BrownianBridgeKl => Ok(SQRT_2 * (l * PI * t).sin()),
        BasisFamily::Custom(c) => c.eval(lambda, t),
    }
}

/// `G_m` for one model together with its projector.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    g: Mat,
    model: Vec<usize>,
    basis: BasisFamily,
    points: DesignPoints,
    projector: Projector,
}

impl DesignMatrix {
    pub fn g(&self) -> &Mat {
        &self.g
    }

    pub fn model(&self) -> &[usize] {
        &self.model
    }

    /// `|m|`
    pub fn size(&self) -> usize {
        self.model.len()
    }

    pub fn basis(&self) -> &BasisFamily {
        &self.basis
    }

    pub fn points(&self) -> &DesignPoints {
        &self.points
    }

    pub fn projector(&self) -> &Projector {
        &self.projector
    }
}

/// Design matrix of the nested model `{1, …, m_size}`.
pub fn design_matrix(
    basis: &BasisFamily,
    m_size: usize,
    points: &DesignPoints,
) -> Result<DesignMatrix> {
    if m_size == 0 {
        return Err(CovselError::InvalidBasis(
            "model size must be at least 1".into(),
        ));
    }
    let model: Vec<usize> = (1..=m_size).collect();
    design_matrix_for_model(basis, &model, points)
}

/// Design matrix for an arbitrary index set `m`.
pub fn design_matrix_for_model(
    basis: &BasisFamily,
    model: &[usize],
    points: &DesignPoints,
) -> Result<DesignMatrix> {
    if model.is_empty() {
        return Err(CovselError::InvalidBasis("empty model".into()));
    }
    let g = basis_matrix(basis, model, points)?;
    let projector = projector(&g)?;
    Ok(DesignMatrix {
        g,
        model: model.to_vec(),
        basis: basis.clone(),
        points: points.clone(),
        projector,
    })
}

/// Raw `p×|m|` evaluation matrix, without a projector.
pub fn basis_matrix(basis: &BasisFamily, model: &[usize], points: &DesignPoints) -> Result<Mat> {
    let t = points.as_slice();
    let mut g = Mat::zeros(t.len(), model.len());
    for (c, &lambda) in model.iter().enumerate() {
        for (j, &tj) in t.iter().enumerate() {
            g[(j, c)] = eval_basis(basis, lambda, tj)?;
        }
    }
    Ok(g)
}

/// The nested collection `{1}, {1,2}, …, {1..max_size}`.
pub fn nested_collection(
    basis: &BasisFamily,
    max_size: usize,
    points: &DesignPoints,
) -> Result<Vec<DesignMatrix>> {
    (1..=max_size)
        .map(|m| design_matrix(basis, m, points))
        .collect()
}
