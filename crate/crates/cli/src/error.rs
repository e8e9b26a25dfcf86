use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const IO: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const PARSE: i32 = 3;
    pub const DOMAIN: i32 = 4;
    pub const SIZE_REFUSAL: i32 = 5;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{source_name}: line {line}, column {column}: {message}")]
    Parse {
        source_name: String,
        line: u64,
        column: usize,
        message: String,
    },

    #[error("{source_name}: need n ≥ {required} data rows, found {found}")]
    TooFewRows {
        source_name: String,
        required: usize,
        found: usize,
    },

    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Core(#[from] rfm_core::Error),

    #[error("writing output: {0}")]
    Output(#[from] std::io::Error),

    #[error("serializing report: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Output(_) | CliError::Json(_) => exit::IO,
            CliError::Parse { .. } | CliError::TooFewRows { .. } => exit::PARSE,
            CliError::Usage(_) => exit::USAGE,
            CliError::Core(rfm_core::Error::EnumerationTooLarge { .. }) => exit::SIZE_REFUSAL,
            CliError::Core(_) => exit::DOMAIN,
        }
    }

    /// Extra guidance printed after the error message.
    pub fn hint(&self) -> Option<&'static str> {
        match self {
            CliError::Core(rfm_core::Error::EnumerationTooLarge { .. }) => {
                Some("use --mode mc --samples M for a Monte Carlo estimate, or raise --max-exact-n")
            }
            CliError::Core(rfm_core::Error::ZeroBandwidth) => Some("pass --bandwidth <h>"),
            _ => None,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
