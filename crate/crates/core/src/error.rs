use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed CSV at row {row}: {message}")]
    Csv { row: usize, message: String },

    #[error("empty data: {0} has a header but no records")]
    EmptyData(String),

    #[error("ragged row {row}: expected {expected} fields, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("missing value at row {row}, column '{column}'")]
    MissingCell { row: usize, column: String },

    #[error("duplicate column name '{0}'")]
    DuplicateColumn(String),

    #[error("unknown column '{0}'")]
    UnknownColumn(String),

    #[error("column '{column}' row {row}: '{value}' is not a finite number")]
    NotNumeric {
        column: String,
        row: usize,
        value: String,
    },

    #[error("series must contain at least one value")]
    EmptySeries,

    #[error("series value at index {0} is not finite")]
    NonFinite(usize),

    #[error("{0}")]
    ZeroVariance(String),

    #[error("pattern length {n} out of range for a series of length {len} (need 2 <= n <= min(len, {max}))")]
    PatternLength { n: usize, len: usize, max: usize },

    #[error("invalid pattern-length range [{min}, {max}] for a series of length {len}")]
    PatternRange { min: usize, max: usize, len: usize },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("series length mismatch (original {original}, randomized {randomized}): the randomized output must stay index-aligned with the original, in the same order")]
    LengthMismatch { original: usize, randomized: usize },

    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("invalid config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
