//! Crate-wide error type.

use std::path::PathBuf;

/// Errors produced by the forensics pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("unsupported wav file {path}: {msg}")]
    UnsupportedWav { path: PathBuf, msg: String },

    #[error("invalid manifest: {0}")]
    Manifest(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate frame: {0}")]
    DegenerateFrame(String),

    #[error("no root maps into search band [{low_hz}, {high_hz}] Hz")]
    NoRootInBand { low_hz: f64, high_hz: f64 },

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("empty sequence: {0}")]
    EmptySequence(String),

    #[error("feature '{feature}' failed: {msg}")]
    Feature { feature: String, msg: String },

    #[error("degenerate training data: {0}")]
    DegenerateData(String),

    #[error("missing class samples for pair {0}-{1}")]
    MissingClassSamples(String, String),

    #[error("category mismatch: classifier is {expected}, features are {actual}")]
    CategoryMismatch { expected: String, actual: String },

    #[error("no classifier for category {0}")]
    MissingCategoryModel(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
