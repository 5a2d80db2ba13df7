//! Covariance function estimation for replicated observations of a
//! zero-mean process.
//!
//! The empirical covariance of `n` replicates observed at `p` fixed points is
//! projected onto the matrix model spaces spanned by a basis family, and the
//! model is chosen by minimizing an unbiased estimate of the Frobenius risk.
//!
//! - [`linalg`]: vec/Kronecker algebra, generalized inverses, projectors.
//! - [`basis`]: basis families, design points and design matrices.
//! - [`covest`]: the estimators, the URE criterion and model selection.
//! - [`sim`]: simulated processes and Monte Carlo risk estimates.
//! - [`experiment`], [`commands`]: configurations and the file-producing
//!   front end used by the `covsel` binary.
//! - [`verify`]: identity and Monte Carlo property suites.

pub mod basis;
pub mod commands;
pub mod covest;
pub mod error;
pub mod experiment;
pub mod io;
pub mod linalg;
pub mod sim;
pub mod verify;

pub use basis::{
    design_matrix, design_matrix_for_model, equispaced_points, equispaced_points_with, eval_basis,
    nested_collection, BasisFamily, CustomBasis, DesignMatrix, DesignPoints, GridConvention,
};
pub use covest::{
    empirical_covariance, gamma_hat_sq, select_model, sigma_hat, ure_score, CovarianceEstimate,
    ModelScore, SampleSet, SelectionResult,
};
pub use error::{CovselError, Result};
pub use linalg::{
    frobenius_inner, kron, project_to_model_space, projector, pseudo_inverse, unvec, vec, Mat,
    Projector, SymMat,
};
pub use sim::{
    mc_risk_curve, oracle_model, simulate, trace_phi, true_sigma, verify_oracle_inequality,
    ProcessSpec, RiskCurve,
};
