//! Error type shared across the library.

use thiserror::Error;

/// Errors produced by lattice, model, estimation and testing routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid neighborhood template: {0}")]
    InvalidTemplate(String),

    #[error("invalid sampling window: {0}")]
    InvalidWindow(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("conclique {index} has no residuals")]
    EmptyConclique { index: usize },

    #[error("cover does not match template: {0}")]
    CoverMismatch(String),

    #[error("singular design: {0}")]
    SingularDesign(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("covariance matrix not positive definite after maximum jitter {max_jitter:e}")]
    NotPositiveDefinite { max_jitter: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("too many replicate failures: {dropped} of {total} dropped")]
    TooManyFailures { dropped: usize, total: usize },

    #[error("data error: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
