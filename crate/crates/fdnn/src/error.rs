use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the library and the command-line harness.
#[derive(Debug, Error)]
pub enum FdnnError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("incompatible grids: {0}")]
    IncompatibleGrids(String),

    #[error("class {0:+} has no samples")]
    EmptyClass(i8),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl FdnnError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        FdnnError::InvalidArgument(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        FdnnError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status used by the command-line harness.
    pub fn exit_code(&self) -> u8 {
        match self {
            FdnnError::InvalidArgument(_) => 2,
            FdnnError::NumericalFailure(_) => 4,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, FdnnError>;
