use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),

    #[error("missing artifact {}; run `parkbeam {command}` first", artifact.display())]
    MissingArtifact { artifact: PathBuf, command: &'static str },

    #[error("{}: {message}", path.display())]
    Artifact { path: PathBuf, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] parkbeam::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn artifact(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        CliError::Artifact {
            path: path.into(),
            message: msg.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    /// 2 for bad input or configuration, 1 for internal failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::MissingArtifact { .. } | CliError::Artifact { .. } => 2,
            CliError::Core(e) if e.is_validation() => 2,
            CliError::Csv(_) => 2,
            _ => 1,
        }
    }
}
