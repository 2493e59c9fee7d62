use thiserror::Error;

use crate::linalg::LinalgError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("outcome mismatch: {0}")]
    OutcomeMismatch(String),
    #[error("invalid postprocessing matrix: {0}")]
    InvalidPostprocessing(String),
    #[error("invalid object: {0}")]
    Invalid(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("all outcome probabilities vanish at step {step}")]
    ZeroProbability { step: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
