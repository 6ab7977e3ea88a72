//! Identifiability analysis for the SEIR-HCD model.
//!
//! - [`sobol`]: Saltelli sampling and first-order Sobol indices.
//! - [`lhs`]: Latin hypercube designs.
//! - [`gp`]: regression + Gaussian-process emulators fitted by bounded
//!   quasi-Newton ([`lbfgsb`]).
//! - [`history`]: implausibility and history matching.
//! - [`forward`]: the PDE model as a vector-valued function of parameters.

pub mod bounds;
pub mod error;
pub mod forward;
pub mod gp;
pub mod history;
pub mod lbfgsb;
pub mod lhs;
pub mod sobol;
pub mod stats;

pub use bounds::ParameterBounds;
pub use error::{IdentError, Result};
pub use forward::ForwardModel;
pub use gp::{fit_emulator, EmulatorConfig, EmulatorModel, LooResult};
pub use history::{history_match, implausibility, HistoryTarget, PlausibleSpace};
pub use lhs::{lhc_sample, LhcDesign};
pub use sobol::{analyze, first_order_indices, saltelli_sample, SensitivityResult, SobolOptions};
