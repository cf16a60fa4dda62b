//! Scenario-driven runner for detection-probability, power and null-size
//! experiments.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod report;
pub mod run;
pub mod scenario;

pub use error::{CliError, Diagnostic};
pub use run::{run, Command, Manifest, RunConfig, RunSummary};
