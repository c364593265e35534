//! Experiment runner behind the `hmflow` binary: configuration parsing,
//! parameter sweeps and CSV output.

pub mod commands;
pub mod config;
pub mod output;

use std::io;
use std::path::{Path, PathBuf};

use hmflow::{FemError, MeshError, SchemeError};
use thiserror::Error;

pub use commands::{cmd_meshgen, cmd_run, cmd_table, cmd_verify, execute_sweep, RunOutcome};
pub use config::{ExperimentConfig, MeshSource};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("refusing to overwrite {} (pass --force)", .0.display())]
    Exists(PathBuf),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error("run with tau = {tau:e} failed: {source}")]
    Solver { tau: f64, source: SchemeError },
    #[error("identity verification failed: {0}")]
    Verification(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self::Config(msg.into())
    }

    pub fn io(path: impl AsRef<Path>, source: io::Error) -> Self {
        Self::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    /// 1: configuration or I/O, 2: solver failure, 3: identity check failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Solver { source, .. } => match source {
                SchemeError::Config(_) | SchemeError::NotUnitLength { .. } => 1,
                _ => 2,
            },
            Self::Verification(_) => 3,
            _ => 1,
        }
    }
}
