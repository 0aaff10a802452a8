use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("empty train set")]
    EmptyTrainSet,

    #[error("parse error in {file} at row {row}, column `{column}`: {reason}")]
    Parse {
        file: String,
        row: usize,
        column: String,
        reason: String,
    },

    #[error("no counterexample for group ({label},{sensitive})")]
    NoCounterexample { label: usize, sensitive: usize },

    #[error("isolated pair: both neighbor distributions are empty")]
    IsolatedPair,

    #[error("no contributions: every group has zero contribution")]
    NoContributions,

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("invalid split: {0}")]
    Split(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Error {
    Error::Shape {
        op,
        detail: detail.into(),
    }
}
