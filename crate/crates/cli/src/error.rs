use seirhcd_core::ModelError;
use seirhcd_ident::IdentError;
use seirhcd_tt::TtError;
use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("empty plausible space: {0}")]
    EmptySpace(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::EmptySpace(_) => 4,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }
}

fn model_is_config(e: &ModelError) -> bool {
    matches!(
        e,
        ModelError::InvalidParams(_)
            | ModelError::UnknownParameter(_)
            | ModelError::InvalidGrid(_)
            | ModelError::InvalidSource(_)
            | ModelError::InvalidObservations(_)
            | ModelError::Scenario(_)
            | ModelError::Io(_)
            | ModelError::Csv(_)
            | ModelError::Json(_)
    )
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        if model_is_config(&e) {
            CliError::Config(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

impl From<IdentError> for CliError {
    fn from(e: IdentError) -> Self {
        match e {
            IdentError::Model(m) => m.into(),
            IdentError::InvalidBounds(_)
            | IdentError::InvalidInput(_)
            | IdentError::Io(_)
            | IdentError::Json(_)
            | IdentError::Csv(_) => CliError::Config(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<TtError> for CliError {
    fn from(e: TtError) -> Self {
        match e {
            TtError::AllFailed { .. } | TtError::BudgetExhausted => {
                CliError::Numerical(e.to_string())
            }
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Config(e.to_string())
    }
}
