use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Parse(String),
    #[error("config: invalid `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Core(#[from] cbs_core::CbsError),
    #[error(transparent)]
    Phys(#[from] cbs_core::PhysError),
    #[error(transparent)]
    Oracle(#[from] cbs_oracle::OracleError),
}

pub type Result<T> = std::result::Result<T, CliError>;
