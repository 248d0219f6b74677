use hexp_finsler::GeometryError;
use thiserror::Error;

/// Everything that stops a command before a verdict is reached. All of
/// these map to exit code 2.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Geometry(#[from] GeometryError),

    #[error("malformed report {path}: {reason}")]
    Report { path: String, reason: String },

    #[error("i/o error on {path}: {reason}")]
    Io { path: String, reason: String },
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn io(path: impl std::fmt::Display, err: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_string(),
            reason: err.to_string(),
        }
    }
}
