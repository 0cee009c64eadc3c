use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, GicaError>;

#[derive(Debug, Error)]
pub enum GicaError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed CSV in {path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("invalid value {value:?} at row {row}, column {column}")]
    BadCell {
        row: usize,
        column: usize,
        value: String,
    },

    #[error("two columns required, found {found}")]
    TooFewColumns { found: usize },

    #[error("length mismatch: x has {x} samples, y has {y}")]
    LengthMismatch { x: usize, y: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("not enough samples: {needed} required, {available} available")]
    TooShort { needed: usize, available: usize },

    #[error("rank-deficient regressor matrix ({0})")]
    RankDeficient(String),

    #[error("unstable model: spectral radius {radius:.6} >= 1")]
    Unstable { radius: f64 },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("measure {measure} cannot be tested against {hypothesis} surrogates")]
    HypothesisMismatch {
        measure: String,
        hypothesis: String,
    },
}

impl GicaError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        GicaError::InvalidArgument(msg.into())
    }
}
