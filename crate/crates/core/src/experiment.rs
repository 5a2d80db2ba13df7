//! Experiment configurations: the four preset studies and custom setups,
//! loadable from JSON and resolvable into a process, design points and a
//! nested model collection.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::basis::{
    equispaced_points_with, nested_collection, BasisFamily, CustomBasis, DesignMatrix,
    DesignPoints, GridConvention,
};
use crate::covest::SampleSet;
use crate::error::{CovselError, Result};
use crate::linalg::SymMat;
use crate::sim::{simulate, true_sigma, ProcessSpec, DEFAULT_POOL};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExampleKind {
    /// Scaled Fourier basis, unit coefficient variances.
    Ex1,
    /// Scaled Fourier basis, variances `0.0475 + 0.95^λ`.
    Ex1b,
    /// Cosine basis, uniform coefficients weighted by `(−1)^{λ+1}/λ²`.
    Ex2,
    /// Brownian bridge with its sine Karhunen–Loève basis.
    Ex3,
    Custom,
}

impl FromStr for ExampleKind {
    type Err = CovselError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ex1" => Ok(Self::Ex1),
            "ex1b" => Ok(Self::Ex1b),
            "ex2" => Ok(Self::Ex2),
            "ex3" => Ok(Self::Ex3),
            "custom" => Ok(Self::Custom),
            other => Err(CovselError::Config(format!("unknown example {other:?}"))),
        }
    }
}

impl fmt::Display for ExampleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Ex1 => "ex1",
            Self::Ex1b => "ex1b",
            Self::Ex2 => "ex2",
            Self::Ex3 => "ex3",
            Self::Custom => "custom",
        })
    }
}

/// Coefficient profile `λ ↦ value` for `λ = 1..=m*`.
///
/// Grammar: `const:c`, `geom:c,r` (`c + r^λ`), `power:k` (`λ^-k`),
/// `alt-power:k` (`(−1)^{λ+1} λ^-k`), `list:v1,v2,...`.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Const(f64),
    Geom { offset: f64, ratio: f64 },
    Power(f64),
    AltPower(f64),
    List(Vec<f64>),
}

impl FromStr for Profile {
    type Err = CovselError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || CovselError::Config(format!("bad variance profile {s:?}"));
        let (kind, args) = s.split_once(':').ok_or_else(bad)?;
        let nums = args
            .split(',')
            .map(|a| a.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        match (kind.trim(), nums.as_slice()) {
            ("const", [c]) => Ok(Self::Const(*c)),
            ("geom", [c, r]) => Ok(Self::Geom {
                offset: *c,
                ratio: *r,
            }),
            ("power", [k]) => Ok(Self::Power(*k)),
            ("alt-power", [k]) => Ok(Self::AltPower(*k)),
            ("list", vals) if !vals.is_empty() => Ok(Self::List(vals.to_vec())),
            _ => Err(bad()),
        }
    }
}

impl Profile {
    pub fn values(&self, m_star: usize) -> Result<Vec<f64>> {
        let vals: Vec<f64> = match self {
            Self::Const(c) => vec![*c; m_star],
            Self::Geom { offset, ratio } => (1..=m_star)
                .map(|l| offset + ratio.powi(l as i32))
                .collect(),
            Self::Power(k) => (1..=m_star).map(|l| (l as f64).powf(-k)).collect(),
            Self::AltPower(k) => (1..=m_star)
                .map(|l| if l % 2 == 1 { 1.0 } else { -1.0 } * (l as f64).powf(-k))
                .collect(),
            Self::List(v) => {
                if v.len() != m_star {
                    return Err(CovselError::Config(format!(
                        "profile lists {} values but m_star = {m_star}",
                        v.len()
                    )));
                }
                v.clone()
            }
        };
        Ok(vals)
    }
}

/// User-facing configuration. Every field is optional; unset fields take the
/// preset's value. A JSON file and command-line flags are merged with
/// [`ExperimentConfig::overridden_by`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub example: Option<ExampleKind>,
    pub n: Option<usize>,
    pub p: Option<usize>,
    #[serde(rename = "M")]
    pub max_model: Option<usize>,
    pub m_star: Option<usize>,
    /// Variances `V(a_λ)` for Gaussian coefficients, weights `ζ_λ` for
    /// uniform ones.
    pub variance_profile: Option<String>,
    /// `fourier`, `cosine` or `bb-kl`; ignored when `basis_csv` is set.
    pub basis: Option<String>,
    /// `gaussian`, `uniform` or `brownian-bridge`.
    pub process: Option<String>,
    pub grid: Option<GridConvention>,
    pub seed: Option<u64>,
    pub reps: Option<usize>,
    pub pool: Option<usize>,
    pub threads: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub center: Option<bool>,
    /// Sample CSV to analyse instead of simulating.
    pub data: Option<PathBuf>,
    /// Tabulated basis CSV.
    pub basis_csv: Option<PathBuf>,
}

macro_rules! override_fields {
    ($base:expr, $top:expr, $($f:ident),*) => {
        ExperimentConfig { $($f: $top.$f.clone().or($base.$f),)* }
    };
}

impl ExperimentConfig {
    pub fn for_example(kind: ExampleKind) -> Self {
        Self {
            example: Some(kind),
            ..Self::default()
        }
    }

    pub fn from_json_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Fields set in `top` win.
    pub fn overridden_by(self, top: &Self) -> Self {
        override_fields!(
            self,
            top,
            example,
            n,
            p,
            max_model,
            m_star,
            variance_profile,
            basis,
            process,
            grid,
            seed,
            reps,
            pool,
            threads,
            output_dir,
            center,
            data,
            basis_csv
        )
    }

    pub fn resolve(&self) -> Result<Experiment> {
        let example = self.example.unwrap_or(ExampleKind::Custom);
        let preset = Preset::of(example);
        let grid = self.grid.unwrap_or_default();

        let custom_basis = match &self.basis_csv {
            Some(path) => Some(Arc::new(CustomBasis::from_csv_path(path)?)),
            None => None,
        };
        let data = match &self.data {
            Some(path) => Some(SampleSet::from_csv_path(path)?),
            None => None,
        };

        let points = match (&data, &custom_basis) {
            (Some(x), _) => x.points().clone(),
            (None, Some(c)) => c.points(),
            (None, None) => equispaced_points_with(self.p.unwrap_or(preset.p), grid)?,
        };
        let p = points.len();
        let n = match &data {
            Some(x) => x.n(),
            None => self.n.unwrap_or(preset.n),
        };
        let max_model = self.max_model.unwrap_or(preset.max_model);
        let m_star = self.m_star.unwrap_or(if example == ExampleKind::Custom {
            p
        } else {
            preset.m_star
        });

        let basis = match &custom_basis {
            Some(c) => {
                if c.points() != points {
                    return Err(CovselError::PointsMismatch);
                }
                BasisFamily::Custom(c.clone())
            }
            None => basis_by_name(self.basis.as_deref().unwrap_or(preset.basis), p)?,
        };

        if n < SampleSet::MIN_REPLICATES {
            return Err(CovselError::Config(format!("n must be >= 3, got {n}")));
        }
        if max_model == 0 {
            return Err(CovselError::Config("M must be >= 1".into()));
        }
        let ceiling = match &basis {
            BasisFamily::Custom(c) => c.len().min(p),
            _ => p,
        };
        if max_model > ceiling {
            return Err(CovselError::Config(format!(
                "M = {max_model} exceeds the rank ceiling {ceiling} of the design"
            )));
        }
        if m_star == 0 {
            return Err(CovselError::Config("m_star must be >= 1".into()));
        }
        let seed = self.seed.unwrap_or(DEFAULT_SEED);

        let process = if data.is_some() {
            None
        } else {
            let kind = self.process.as_deref().unwrap_or(preset.process);
            let profile: Profile = self
                .variance_profile
                .as_deref()
                .unwrap_or(preset.profile)
                .parse()?;
            Some(match kind {
                "gaussian" => ProcessSpec::basis_gaussian(
                    basis.clone(),
                    points.clone(),
                    &profile.values(m_star)?,
                    seed,
                )?,
                "uniform" => ProcessSpec::basis_uniform(
                    basis.clone(),
                    points.clone(),
                    &profile.values(m_star)?,
                    seed,
                )?,
                "brownian-bridge" => ProcessSpec::brownian_bridge(points.clone(), seed),
                other => return Err(CovselError::Config(format!("unknown process {other:?}"))),
            })
        };

        Ok(Experiment {
            example,
            n,
            p,
            max_model,
            m_star,
            grid,
            seed,
            reps: self.reps.unwrap_or(preset.reps),
            pool: self.pool.unwrap_or(DEFAULT_POOL),
            threads: self.threads,
            center: self.center.unwrap_or(false),
            output_dir: self
                .output_dir
                .clone()
                .unwrap_or_else(|| PathBuf::from(".")),
            points,
            basis,
            process,
            data,
        })
    }
}

fn basis_by_name(name: &str, p: usize) -> Result<BasisFamily> {
    match name {
        "fourier" | "fourier_scaled" => BasisFamily::fourier_scaled(p),
        "cosine" => Ok(BasisFamily::Cosine),
        "bb-kl" | "brownian_bridge_kl" => Ok(BasisFamily::BrownianBridgeKl),
        other => Err(CovselError::Config(format!("unknown basis {other:?}"))),
    }
}

struct Preset {
    n: usize,
    p: usize,
    max_model: usize,
    m_star: usize,
    basis: &'static str,
    process: &'static str,
    profile: &'static str,
    reps: usize,
}

impl Preset {
    fn of(kind: ExampleKind) -> Self {
        match kind {
            ExampleKind::Ex1 => Self {
                n: 50,
                p: 35,
                max_model: 31,
                m_star: 35,
                basis: "fourier",
                process: "gaussian",
                profile: "const:1",
                // Models 24 and 26 differ in risk by under 0.01.
                reps: 100_000,
            },
            ExampleKind::Ex1b => Self {
                n: 60,
                p: 35,
                max_model: 34,
                m_star: 35,
                basis: "fourier",
                process: "gaussian",
                profile: "geom:0.0475,0.95",
                reps: 2000,
            },
            ExampleKind::Ex2 => Self {
                n: 1000,
                p: 40,
                max_model: 20,
                m_star: 50,
                basis: "cosine",
                process: "uniform",
                profile: "alt-power:2",
                reps: 1000,
            },
            ExampleKind::Ex3 => Self {
                n: 100,
                p: 35,
                max_model: 20,
                m_star: 35,
                basis: "bb-kl",
                process: "brownian-bridge",
                profile: "const:1",
                reps: 10_000,
            },
            ExampleKind::Custom => Self {
                n: 100,
                p: 20,
                max_model: 10,
                m_star: 20,
                basis: "cosine",
                process: "gaussian",
                profile: "power:2",
                reps: 1000,
            },
        }
    }
}

/// A fully resolved experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub example: ExampleKind,
    pub n: usize,
    pub p: usize,
    pub max_model: usize,
    pub m_star: usize,
    pub grid: GridConvention,
    pub seed: u64,
    pub reps: usize,
    pub pool: usize,
    pub threads: Option<usize>,
    pub center: bool,
    pub output_dir: PathBuf,
    pub points: DesignPoints,
    pub basis: BasisFamily,
    /// `None` when the samples come from a file.
    pub process: Option<ProcessSpec>,
    pub data: Option<SampleSet>,
}

impl Experiment {
    /// Nested models `{1}, …, {1..M}`.
    pub fn collection(&self) -> Result<Vec<DesignMatrix>> {
        nested_collection(&self.basis, self.max_model, &self.points)
    }

    pub fn process(&self) -> Result<&ProcessSpec> {
        self.process.as_ref().ok_or_else(|| {
            CovselError::Config("this command needs a simulated process, not a data file".into())
        })
    }

    /// Loaded data, or `n` simulated replicates, centered on request.
    pub fn samples(&self) -> Result<SampleSet> {
        let x = match &self.data {
            Some(x) => x.clone(),
            None => simulate(self.process()?, self.n)?,
        };
        Ok(if self.center { x.centered() } else { x })
    }

    pub fn sigma_true(&self) -> Result<Option<SymMat>> {
        self.process.as_ref().map(true_sigma).transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_resolve() {
        let ex1 = ExperimentConfig::for_example(ExampleKind::Ex1)
            .resolve()
            .unwrap();
        assert_eq!((ex1.n, ex1.p, ex1.max_model, ex1.m_star), (50, 35, 31, 35));
        assert_eq!(ex1.basis, BasisFamily::FourierScaled { p_scale: 35 });
        assert_eq!(ex1.collection().unwrap().len(), 31);

        let ex2 = ExperimentConfig::for_example(ExampleKind::Ex2)
            .resolve()
            .unwrap();
        assert_eq!(
            (ex2.n, ex2.p, ex2.max_model, ex2.m_star),
            (1000, 40, 20, 50)
        );
        let sigma = ex2.sigma_true().unwrap().unwrap();
        assert_eq!(sigma.dim(), 40);

        let ex3 = ExperimentConfig::for_example(ExampleKind::Ex3)
            .resolve()
            .unwrap();
        assert!(matches!(
            ex3.process.unwrap().kind,
            crate::sim::ProcessKind::BrownianBridge
        ));
    }

    #[test]
    fn profiles() {
        let p: Profile = "geom:0.0475,0.95".parse().unwrap();
        let v = p.values(3).unwrap();
        assert!((v[0] - (0.0475 + 0.95)).abs() < 1e-15);
        assert!((v[2] - (0.0475 + 0.95f64.powi(3))).abs() < 1e-15);
        let z = "alt-power:2".parse::<Profile>().unwrap().values(3).unwrap();
        assert_eq!(z, vec![1.0, -0.25, 1.0 / 9.0]);
        assert_eq!(
            "const:2".parse::<Profile>().unwrap().values(2).unwrap(),
            vec![2.0, 2.0]
        );
        assert!("list:1,2".parse::<Profile>().unwrap().values(3).is_err());
        assert!("nope".parse::<Profile>().is_err());
        assert!("power:a".parse::<Profile>().is_err());
    }

    #[test]
    fn invalid_configs() {
        let mut c = ExperimentConfig::for_example(ExampleKind::Custom);
        c.n = Some(2);
        assert!(c.resolve().is_err());
        c.n = Some(10);
        c.max_model = Some(0);
        assert!(c.resolve().is_err());
        c.max_model = Some(21);
        assert!(c.resolve().is_err());
        c.max_model = Some(1);
        c.basis = Some("wavelet".into());
        assert!(c.resolve().is_err());
    }

    #[test]
    fn flags_override_file() {
        let file: ExperimentConfig =
            serde_json::from_str(r#"{"example":"ex2","n":500,"M":8,"seed":3}"#).unwrap();
        let flags = ExperimentConfig {
            n: Some(700),
            ..Default::default()
        };
        let merged = file.overridden_by(&flags);
        assert_eq!(merged.example, Some(ExampleKind::Ex2));
        assert_eq!(merged.n, Some(700));
        assert_eq!(merged.max_model, Some(8));
        assert_eq!(merged.seed, Some(3));
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"bogus":1}"#).is_err());
    }
}
