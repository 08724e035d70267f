use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not positive definite (leading minor {minor})")]
    NotPositiveDefinite { minor: usize },

    #[error("matrix is not symmetric: entry ({row}, {col}) differs from its mirror")]
    NotSymmetric { row: usize, col: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("sweep {sweep}: {source}")]
    Sweep {
        sweep: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("column `{0}` is constant")]
    ConstantColumn(String),

    #[error("CSV has a header but no data rows")]
    EmptyData,

    #[error("non-numeric value {value:?} in column `{column}` (line {line})")]
    NonNumeric {
        column: String,
        line: usize,
        value: String,
    },

    #[error("invalid date {value:?} on line {line}")]
    BadDate { value: String, line: usize },

    #[error("boundary {0} is outside the data range")]
    BoundaryOutOfRange(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{0}")]
    Config(String),

    #[error("{path}: {source}")]
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

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short class name, used for process exit codes and log lines.
    pub fn class(&self) -> &'static str {
        match self {
            Error::NotPositiveDefinite { .. } | Error::NotSymmetric { .. } => "numeric",
            Error::Sweep { .. } => "sampler",
            Error::DimensionMismatch { .. }
            | Error::IndexOutOfRange { .. }
            | Error::InvalidParameter(_)
            | Error::Empty(_) => "argument",
            Error::ConstantColumn(_)
            | Error::EmptyData
            | Error::NonNumeric { .. }
            | Error::BadDate { .. }
            | Error::BoundaryOutOfRange(_)
            | Error::Csv(_) => "data",
            Error::Config(_) | Error::Json(_) => "config",
            Error::Io { .. } => "io",
            Error::Context { source, .. } => source.class(),
        }
    }
}
