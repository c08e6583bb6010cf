//! Experiment configuration, run manifests, evaluation, metrics aggregation,
//! plotting and the `uvaa` command line.

pub mod cli;
pub mod config;
pub mod manifest;
pub mod plot;
pub mod tasks;

use std::path::PathBuf;

use thiserror::Error;

pub use config::{AblationFlags, ExperimentConfig, Scenario};
pub use manifest::{ObjectiveInfo, RunManifest, MANIFEST_FILE};
pub use tasks::{evaluate, select_best_f1, summarize_runs, train, write_env_trace, EpisodeReport, EvalReport, PolicySource};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{0}")]
    Runtime(String),
    #[error("checkpoint mismatch: {0}")]
    CheckpointMismatch(String),
    #[error("no archive files in {}", .0.display())]
    EmptyDirectory(PathBuf),
    #[error("cannot plot: {0}")]
    PlotInput(String),
}

impl HarnessError {
    /// Process exit status for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::InvalidConfig(_) => 1,
            HarnessError::Runtime(_) => 2,
            HarnessError::CheckpointMismatch(_) => 3,
            HarnessError::EmptyDirectory(_) => 4,
            HarnessError::PlotInput(_) => 5,
        }
    }

    pub(crate) fn runtime(e: impl std::fmt::Display) -> Self {
        HarnessError::Runtime(e.to_string())
    }
}
