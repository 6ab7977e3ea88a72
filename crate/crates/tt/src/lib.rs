//! Tensor-train cross optimization: global minimization of a black-box
//! function over a box, restricted to a uniform tensor grid.

pub mod cross;
pub mod error;
pub mod mapping;
pub mod optimizer;

pub use error::{Result, TtError};
pub use mapping::{mapping_h, update_shift};
pub use optimizer::{tt_optimize, write_log_csv, LogEntry, TTConfig, TTResult, TTState};
