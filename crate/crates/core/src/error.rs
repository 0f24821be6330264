use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("manifest {path}: {message}")]
    ManifestParse { path: PathBuf, message: String },

    #[error("invalid manifest field `{field}`: {message}")]
    Manifest { field: String, message: String },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("column `{column}` row {row}: `{token}` is not numeric")]
    NonNumeric {
        column: String,
        row: usize,
        token: String,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("learner has not been fitted")]
    NotFitted,

    #[error("training labels contain a single class")]
    SingleClass,

    #[error("unknown protected attribute `{0}`")]
    UnknownProtected(String),

    #[error("empty subgroup (protected={protected}, label={label})")]
    EmptySubgroup { protected: u8, label: u8 },

    #[error("explanations are not available for {0} learners")]
    UnsupportedExplanation(String),

    #[error("situation testing would drop {dropped} of {total} rows (limit {limit:.2})")]
    DegenerateFilter {
        dropped: usize,
        total: usize,
        limit: f64,
    },

    #[error("method `{method}` seed {seed}: {source}")]
    Trial {
        method: String,
        seed: u64,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
