use thiserror::Error;

/// Errors raised by the estimation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "matrix is not positive semidefinite: most negative eigenvalue {min_eigenvalue:e} (tolerance {tolerance:e})"
    )]
    NotPsd { min_eigenvalue: f64, tolerance: f64 },

    #[error("matrix is not symmetric: max asymmetry {0:e}")]
    NotSymmetric(f64),

    #[error("degenerate problem: {0}")]
    Degenerate(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
