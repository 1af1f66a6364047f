use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error(
        "eigensolver did not converge after {iterations} iterations \
         (best Ritz value {best}, residual {residual:e})"
    )]
    NoConvergence {
        best: f64,
        residual: f64,
        iterations: usize,
    },

    #[error("dense oracle limited to n <= {limit}, got n = {n}")]
    OracleTooLarge { n: usize, limit: usize },

    #[error("product spectrum has imaginary part {imag:e} above tolerance")]
    ComplexSpectrum { imag: f64 },

    #[error("sample batch is empty")]
    EmptyBatch,

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
