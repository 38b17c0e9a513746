//! Pipeline errors and their process exit codes.

use std::path::PathBuf;

/// Anything a pipeline command can fail with.
#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    /// Bad config file, flag or value. Exit code 2.
    #[error("config error: {0}")]
    Config(String),
    /// Checkpoint written under a different configuration. Exit code 3.
    #[error("checkpoint {path} was written for a different configuration")]
    CheckpointMismatch {
        #[allow(missing_docs)]
        path: PathBuf,
    },
    /// Required input absent or unreadable. Exit code 4.
    #[error("missing or corrupt input {path}: {reason}")]
    Input {
        #[allow(missing_docs)]
        path: PathBuf,
        #[allow(missing_docs)]
        reason: String,
    },
    #[allow(missing_docs)]
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[allow(missing_docs)]
    #[error(transparent)]
    Compute(#[from] anyhow::Error),
}

impl PipelineError {
    /// Process exit code for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::CheckpointMismatch { .. } => 3,
            PipelineError::Input { .. } => 4,
            PipelineError::Io { .. } | PipelineError::Compute(_) => 1,
        }
    }

    pub(crate) fn input(path: impl Into<PathBuf>, reason: impl ToString) -> Self {
        PipelineError::Input {
            path: path.into(),
            reason: reason.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| PipelineError::Io { path, source }
    }
}

#[allow(missing_docs)]
pub type Result<T> = std::result::Result<T, PipelineError>;
