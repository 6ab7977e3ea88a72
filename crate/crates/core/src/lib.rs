//! Spatial SEIR-HCD reaction-diffusion model of epidemic spread.
//!
//! The crate holds the compartment model itself and everything needed to run
//! the direct problem on the unit interval:
//!
//! - [`params`] / [`state`]: domain types and parameter validation.
//! - [`reaction`]: the local kinetics shared by every solver.
//! - [`ode`]: an RK4 integrator for the well-mixed system, used as an oracle.
//! - [`fdm`] / [`fem`]: explicit finite differences and linear finite elements.
//! - [`observations`]: Gaussian-cap sources, daily observables, the misfit
//!   functional and synthetic data.
//! - [`scenario`]: scenario files (TOML or JSON) and the bundled defaults.

pub mod error;
pub mod fdm;
pub mod fem;
pub mod observations;
pub mod ode;
pub mod params;
pub mod reaction;
pub mod scenario;
pub mod state;
pub mod trajectory;

pub use error::{ModelError, Result};
pub use params::{Beta, InitialCounts, ModelParams, Violation, PARAMETER_NAMES};
pub use state::{total_density, Compartment, GridSpec, StateField, StatePoint};
pub use trajectory::{Snapshot, SnapshotCadence, SolverKind, SolverRun};
