use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Caller violated a precondition (bad dimension, bad argument).
    #[error("usage error: {0}")]
    Usage(String),

    /// Input data is malformed or unusable.
    #[error("data error{}: {message}", location(.row, .column))]
    Data {
        row: Option<usize>,
        column: Option<String>,
        message: String,
    },

    #[error("numerical error: {0}")]
    Numerical(String),

    /// An internal guarantee failed; indicates a bug.
    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data {
            row: None,
            column: None,
            message: msg.into(),
        }
    }
}

fn location(row: &Option<usize>, column: &Option<String>) -> String {
    match (row, column) {
        (Some(r), Some(c)) => format!(" at row {r}, column {c:?}"),
        (Some(r), None) => format!(" at row {r}"),
        (None, Some(c)) => format!(" in column {c:?}"),
        (None, None) => String::new(),
    }
}
