use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A quantity that is mathematically undefined for the given inputs
    /// (empty selection, zero denominator, missing class).
    #[error("undefined: {0}")]
    Undefined(String),

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn geometry(msg: impl Into<String>) -> Self {
        Error::Geometry(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn undefined(msg: impl Into<String>) -> Self {
        Error::Undefined(msg.into())
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: msg.into(),
        }
    }

    /// True for errors caused by bad user input rather than internal faults.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Geometry(_)
                | Error::InvalidInput(_)
                | Error::Undefined(_)
                | Error::Parse { .. }
                | Error::Csv(_)
                | Error::Json(_)
        )
    }
}
