//! Configuration-driven runner for the sweep, spectrum, continuation and ground-state
//! experiments of the `sweepbec` library.

pub mod config;
pub mod manifest;
pub mod presets;
pub mod runner;

pub use config::{ExperimentConfig, Initial, Kind};
pub use manifest::{RunManifest, Status};
pub use runner::{check, run, CheckLine};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("{} metric(s) outside the expected range", .0)]
    CheckFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
            CliError::CheckFailed(_) => 4,
        }
    }
}
