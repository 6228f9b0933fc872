use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, declarations or scenario values.
    #[error("{0}")]
    Usage(String),

    /// Input files that do not parse or do not match the model.
    #[error("{0}")]
    Parse(String),

    #[error("{0}")]
    Fit(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Io { .. } => 2,
            CliError::Fit(_) => 3,
            CliError::Usage(_) => 4,
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
