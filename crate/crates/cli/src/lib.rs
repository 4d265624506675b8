//! Experiment runner for `ppt-core`.
//!
//! An experiment is a JSON [`ExperimentSpec`]: a kind (`distance`, `sample`,
//! `bound`, `estimate`, `tail`, `isoperimetry`, `verify`), kind-specific
//! parameters, a seed and a sample size. [`run_experiment`] turns it into a
//! [`Report`] of named results. The `ppt` binary wraps both.

pub mod error;
pub mod expr;
pub mod report;
mod run;
pub mod scenarios;
pub mod spec;

pub use error::{CliError, Result};
pub use expr::parse_density_expr;
pub use report::{NamedResult, Report, ResultValue};
pub use run::{run_experiment, run_with};
pub use spec::{ExperimentSpec, Kind, Scenario};

/// Version recorded in every report.
pub const LIBRARY_VERSION: &str = env!("CARGO_PKG_VERSION");
