use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("integer overflow computing {0}")]
    Overflow(&'static str),

    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("moment matrix is singular (factorization failed with jitter up to {max_jitter:e})")]
    SingularMoment { max_jitter: f64 },

    #[error("non-finite state at t = {time} (trajectory {index:?})")]
    NonFinite { time: f64, index: Option<usize> },

    #[error("monotonicity violated in component {component}: lower {lower} > upper {upper}")]
    MonotonicityViolated {
        component: usize,
        lower: f64,
        upper: f64,
    },

    #[error("system `{0}` is not monotone")]
    NotMonotone(String),

    #[error("empty point set")]
    EmptyPointSet,

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed document {path}: {message}")]
    Document { path: PathBuf, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line tool: 1 for usage, config and
    /// I/O problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::SingularMoment { .. }
            | Error::NonFinite { .. }
            | Error::MonotonicityViolated { .. }
            | Error::Overflow(_) => 3,
            _ => 1,
        }
    }
}
