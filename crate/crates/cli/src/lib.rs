//! Batch front end: Figure-style bound tables, lower-bound witnesses,
//! seeded consistency sweeps and the joint-sum demo.

mod algo;
mod commands;
mod config;
mod sweep;

pub use algo::AnyAlgorithm;
pub use commands::{run, Cli, Command, Output};
pub use config::ExperimentConfig;
pub use sweep::{sweep, SweepReport, SweepViolation};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
    /// A check ran and found a violation.
    #[error("{0}")]
    Violation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Violation(_) => 1,
            CliError::Config(_) | CliError::Io(_) => 2,
        }
    }
}
