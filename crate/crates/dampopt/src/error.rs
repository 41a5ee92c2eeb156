use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Numeric(#[from] dampopt_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed MatrixMarket file: {msg}")]
    MatrixMarket { path: PathBuf, msg: String },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("mode {0} uses SAMDP initialization, which is not implemented; see the README section on modes")]
    SamdpNotImplemented(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{failed} of {total} runs failed; see results.csv")]
    RowsFailed { failed: usize, total: usize },
}

impl CliError {
    /// 2 for problems with the input, 1 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::SamdpNotImplemented(_) | CliError::MatrixMarket { .. } | CliError::Json(_) => 2,
            CliError::Numeric(dampopt_core::Error::InvalidConfig(_))
            | CliError::Numeric(dampopt_core::Error::NegativeGain { .. })
            | CliError::Numeric(dampopt_core::Error::SizeGuard { .. }) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
