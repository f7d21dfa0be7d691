use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    /// Process exit code: 2 for configuration problems, 3 for numerical
    /// failures, 1 for anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical(_) => 3,
            RunError::Io(_) => 1,
        }
    }
}

impl From<spinbus_core::Error> for RunError {
    fn from(e: spinbus_core::Error) -> Self {
        use spinbus_core::Error as E;
        match e {
            E::InvalidParameter(_) | E::Malformed(_) | E::Version { .. } => RunError::Config(e.to_string()),
            E::Io(io) => RunError::Io(io),
            other => RunError::Numerical(other.to_string()),
        }
    }
}

pub(crate) fn config(msg: impl Into<String>) -> RunError {
    RunError::Config(msg.into())
}

pub type RunResult<T> = std::result::Result<T, RunError>;
