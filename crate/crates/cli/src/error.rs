use thiserror::Error;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] fairpca_core::Error),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("model file {path}: {source}")]
    Model {
        path: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    /// The solver stopped before the duality gap closed. Outputs were still
    /// written.
    #[error("solver did not converge: {0}")]
    NotConverged(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use fairpca_core::Error as Core;
        match self {
            CliError::Usage(_) | CliError::Core(Core::Usage(_)) => EXIT_USAGE,
            CliError::Data(_)
            | CliError::Io { .. }
            | CliError::Model { .. }
            | CliError::Csv(_)
            | CliError::Core(Core::Data { .. } | Core::Io(_)) => EXIT_DATA,
            CliError::NotConverged(_) | CliError::Core(Core::Numerical(_) | Core::Internal(_)) => {
                EXIT_NOT_CONVERGED
            }
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
