use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = CbdtError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CbdtError {
    /// Input violates a documented precondition.
    #[error("validation error: {0}")]
    Validation(String),

    /// A file does not have the expected layout.
    #[error("format error in {path}: {message}")]
    Format { path: PathBuf, message: String },

    /// A formula was evaluated outside of its domain (non-positive denominator,
    /// non-finite value, undefined metric).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Training diverged; the partial trace is attached for inspection.
    #[error("training diverged at iteration {iteration}: {message}")]
    Diverged {
        iteration: usize,
        message: String,
        trace: Box<crate::booster::Trace>,
    },

    #[error("cannot access {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CbdtError {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        CbdtError::Validation(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        CbdtError::Numerical(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CbdtError::Io {
            path: path.into(),
            source,
        }
    }

    /// Coarse category used by the command line front end to choose an exit code.
    pub fn kind(&self) -> ErrorKind {
        match self {
            CbdtError::Validation(_) | CbdtError::Format { .. } => ErrorKind::Validation,
            CbdtError::Numerical(_) | CbdtError::Diverged { .. } => ErrorKind::Numerical,
            CbdtError::Io { .. } | CbdtError::Csv(_) | CbdtError::Json(_) => ErrorKind::Runtime,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Runtime,
    Numerical,
}
