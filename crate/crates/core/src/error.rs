use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("bad magic in {0}")]
    BadMagic(PathBuf),

    #[error("unsupported format version {found} (expected {expected})")]
    VersionMismatch { found: u8, expected: u8 },

    #[error("truncated payload: expected {expected} bytes, found {actual}")]
    Truncated { expected: usize, actual: usize },

    #[error("malformed {what}: {detail}")]
    Malformed { what: &'static str, detail: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("eigensolver did not converge after {restarts} restarts (max residual {residual:e})")]
    NonConvergence { restarts: usize, residual: f64 },

    #[error("training diverged at epoch {epoch}: loss {loss} vs initial {initial}")]
    Diverged { epoch: usize, loss: f64, initial: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit status: 2 for bad arguments, 3 for unreadable or
    /// malformed files, 4 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) | Error::DimensionMismatch { .. } => 2,
            Error::Io { .. } | Error::BadMagic(_) | Error::VersionMismatch { .. } | Error::Truncated { .. } | Error::Malformed { .. } => 3,
            Error::Numeric(_) | Error::NonConvergence { .. } | Error::Diverged { .. } => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            2 => "usage",
            3 => "io",
            _ => "numeric",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Malformed {
            what,
            detail: detail.into(),
        }
    }
}
