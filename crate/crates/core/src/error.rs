use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("line {line}: timestamp {timestamp} does not increase on previous {previous}")]
    NonMonotoneTimestamp {
        line: usize,
        timestamp: f64,
        previous: f64,
    },

    #[error("invalid window configuration: {0}")]
    InvalidWindow(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid synthetic spec: {0}")]
    InvalidSynthetic(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("model has not been trained")]
    Untrained,

    #[error("training set is empty")]
    EmptyTrainingSet,

    #[error("need at least two users, got {0}")]
    TooFewUsers(usize),

    #[error("unknown mode {0:?} (expected sup or semi)")]
    UnknownMode(String),

    #[error("power log covers [{log_start}, {log_end}] but run spans [{run_start}, {run_end}]")]
    PowerLogCoverage {
        log_start: f64,
        log_end: f64,
        run_start: f64,
        run_end: f64,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl ToString) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.to_string(),
        }
    }
}
