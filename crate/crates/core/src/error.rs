use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("csv row {row}, column '{column}': {message}")]
    CsvCell {
        row: usize,
        column: String,
        message: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("input has {got} columns but the model was fit with {expected}")]
    ColumnMismatch { expected: usize, got: usize },

    #[error("operation not supported: {0}")]
    Unsupported(String),

    #[error("game with {players} players exceeds the enumeration bound of {max}")]
    TooManyPlayers { players: usize, max: usize },

    #[error("external learner protocol error: {message}\ntranscript:\n{transcript}")]
    Protocol { message: String, transcript: String },

    #[error("all {} model evaluations failed; first cause: {}", .causes.len(), .causes.first().map(String::as_str).unwrap_or("unknown"))]
    AllFailed { causes: Vec<String> },
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
