use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("unknown experiment `{0}` (see `runner list-experiments`)")]
    UnknownExperiment(String),
    #[error("config error in {field}: {reason}")]
    Config { field: String, reason: String },
    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Runtime(String),
}

impl RunnerError {
    /// Process exit status: 2 for usage and configuration, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunnerError::UnknownExperiment(_) | RunnerError::Config { .. } => 2,
            RunnerError::Io { .. } | RunnerError::Runtime(_) => 3,
        }
    }

    pub fn runtime(e: impl std::fmt::Display) -> Self {
        RunnerError::Runtime(e.to_string())
    }
}
