use disttune_core::{LstmError, SeriesError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: gap of {gap_minutes} minutes exceeds two intervals")]
    GapTooLarge {
        path: String,
        line: usize,
        gap_minutes: i64,
    },
    #[error("{path}:{line}: non-positive speed {value}")]
    NonPositiveSpeed {
        path: String,
        line: usize,
        value: f64,
    },
    #[error("{path}: expected header `timestamp,speed_mph`, found `{found}`")]
    BadHeader { path: String, found: String },
    #[error("{path}: no data rows")]
    EmptyFile { path: String },
    #[error("series length {actual} does not match {expected} points for the requested split")]
    BadSplit { expected: usize, actual: usize },
    #[error("manifest: {0}")]
    BadManifest(String),
    #[error("synthetic spec: {0}")]
    BadSpec(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Lstm(#[from] LstmError),
    #[error("manifest json: {0}")]
    Json(#[from] serde_json::Error),
}

impl DataError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        DataError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
