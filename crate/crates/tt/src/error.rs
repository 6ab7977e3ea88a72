use thiserror::Error;

pub type Result<T, E = TtError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum TtError {
    #[error("invalid TT configuration: {0}")]
    InvalidConfig(String),

    #[error("every candidate failed ({failures} failures logged)")]
    AllFailed { failures: usize },

    #[error("evaluation budget exhausted")]
    BudgetExhausted,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
