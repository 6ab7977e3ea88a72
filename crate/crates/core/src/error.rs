use thiserror::Error;

use crate::params::Violation;

pub type Result<T, E = ModelError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid parameters: {}", join_violations(.0))]
    InvalidParams(Vec<Violation>),

    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite state")]
    NonFiniteState,

    #[error("ODE step produced non-finite values at t = {t}")]
    OdeNonFinite { t: f64 },

    #[error("FDM step produced a non-finite value at node k = {k}, step j = {j}")]
    FdmNonFinite { k: usize, j: usize },

    #[error(
        "time step {tau:.3e} exceeds the explicit stability bound {tau_max:.3e}; use at least n_t = {suggested_n_t}"
    )]
    Unstable {
        tau: f64,
        tau_max: f64,
        suggested_n_t: usize,
    },

    #[error("degenerate assembly: zero diagonal at row {row}")]
    DegenerateAssembly { row: usize },

    #[error("tridiagonal solve hit a zero pivot at row {row}")]
    ZeroPivot { row: usize },

    #[error("field does not conform to grid: expected {expected} nodes, found {found}")]
    GridMismatch { expected: usize, found: usize },

    #[error("no snapshot for day {0}")]
    MissingSnapshot(u32),

    #[error("invalid source configuration: {0}")]
    InvalidSource(String),

    #[error("invalid observation series: {0}")]
    InvalidObservations(String),

    #[error("forward solve failed for source {source_desc}: {inner}")]
    ForwardFailed {
        source_desc: String,
        inner: Box<ModelError>,
    },

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
