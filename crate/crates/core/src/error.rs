use thiserror::Error;

pub type Result<T> = std::result::Result<T, CovselError>;

#[derive(Debug, Error)]
pub enum CovselError {
    #[error("bad unvec shape: {len} entries cannot fill a {rows}x{cols} matrix")]
    BadUnvecShape {
        len: usize,
        rows: usize,
        cols: usize,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("decomposition failed")]
    DecompositionFailed,

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("indices start at 1")]
    ZeroIndex,

    #[error("invalid design points: {0}")]
    InvalidPoints(String),

    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    #[error("invalid sample set: {0}")]
    InvalidSamples(String),

    #[error("design points of the samples and of the model differ")]
    PointsMismatch,

    #[error("empty model collection")]
    EmptyCollection,

    #[error("invalid process covariance (min eigenvalue {0:e})")]
    InvalidProcessCovariance(f64),

    #[error("invalid process: {0}")]
    InvalidProcess(String),

    #[error("reps too small: {got} < {min}")]
    RepsTooSmall { got: usize, min: usize },

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
