use thiserror::Error;

use crs_core::Error as CoreError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    /// Process exit code: 2 for bad input, 3 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Core(e) => match e {
                CoreError::InvalidParameter { .. }
                | CoreError::DegenerateLattice(_)
                | CoreError::UnsortedTrace { .. }
                | CoreError::TraceFormat { .. } => 2,
                _ => 3,
            },
        }
    }
}
