use std::path::PathBuf;

use thiserror::Error;

/// Everything that stops a run before its gates are evaluated.
#[derive(Debug, Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Instability(bolab_core::Error),
    #[error("{0}")]
    Contamination(bolab_core::Error),
    #[error("numerical error: {0}")]
    Numerical(bolab_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("writing output: {0}")]
    Output(String),
}

impl RunError {
    pub fn config(msg: impl Into<String>) -> Self {
        RunError::Config(msg.into())
    }

    /// Process exit code. Gate failures are not errors; see [`crate::EXIT_GATE_FAILURE`].
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Instability(_) => 3,
            RunError::Contamination(_) => 4,
            RunError::Numerical(_) | RunError::Io { .. } | RunError::Output(_) => 1,
        }
    }
}

impl From<bolab_core::Error> for RunError {
    fn from(e: bolab_core::Error) -> Self {
        use bolab_core::Error as E;
        match e {
            E::Instability { .. } => RunError::Instability(e),
            E::BoundaryContamination { .. } => RunError::Contamination(e),
            _ => RunError::Numerical(e),
        }
    }
}

impl From<csv::Error> for RunError {
    fn from(e: csv::Error) -> Self {
        RunError::Output(e.to_string())
    }
}

impl From<serde_json::Error> for RunError {
    fn from(e: serde_json::Error) -> Self {
        RunError::Output(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, RunError>;
