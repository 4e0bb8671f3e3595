use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
///
/// Each variant names the subsystem it came from so command-line front ends
/// can tag messages without inspecting the text.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("ply parse error at {location}: {message}")]
    Ply { location: String, message: String },

    #[error("csv error at row {row}: {message}")]
    Csv { row: usize, message: String },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("validation error at index {index}: {message}")]
    Validation { index: usize, message: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("geometry error: {0}")]
    Geometry(String),
}

impl Error {
    /// Short subsystem tag used in CLI diagnostics.
    pub fn module(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Ply { .. } => "ply",
            Error::Csv { .. } => "csv",
            Error::Json(_) => "json",
            Error::Validation { .. } => "validation",
            Error::InvalidInput(_) => "input",
            Error::DimensionMismatch(_) => "shape",
            Error::Geometry(_) => "geometry",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
