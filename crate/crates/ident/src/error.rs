use seirhcd_core::ModelError;
use thiserror::Error;

pub type Result<T, E = IdentError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum IdentError {
    #[error("invalid bounds: {0}")]
    InvalidBounds(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("constant output")]
    ConstantOutput,

    #[error("degenerate denominator")]
    DegenerateDenominator,

    #[error("emulator fit failed: {0}")]
    FitFailed(String),

    #[error("{failed} of {total} base rows failed after resampling")]
    TooManyFailures { failed: usize, total: usize },

    #[error(transparent)]
    Model(#[from] ModelError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
