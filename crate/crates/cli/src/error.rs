use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("resource guard: {0}")]
    Guard(String),
    #[error(transparent)]
    Core(ticktock_core::Error),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn io(path: impl std::fmt::Display, source: io::Error) -> Self {
        CliError::Io { path: path.to_string(), source }
    }

    /// 0 ok, 1 runtime failure, 2 usage error, 3 resource guard.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Schema(_) => 2,
            CliError::Guard(_) => 3,
            CliError::Core(e) => match e {
                ticktock_core::Error::InvalidParameter { .. } | ticktock_core::Error::DimensionMismatch { .. } => 2,
                ticktock_core::Error::ResourceGuard(_) => 3,
                _ => 1,
            },
            CliError::Io { .. } | CliError::Csv(_) | CliError::Json(_) => 1,
        }
    }
}

impl From<ticktock_core::Error> for CliError {
    fn from(e: ticktock_core::Error) -> Self {
        CliError::Core(e)
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
