use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("position {x} nm outside landscape range [{lo}, {hi}] nm")]
    OutOfRange { x: f64, lo: f64, hi: f64 },

    #[error("valley splitting vanishes at {x} nm; local valley frame is degenerate")]
    DegenerateValley { x: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("input spin states are not tomographically complete")]
    SingularReconstruction,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("malformed file: {0}")]
    Malformed(String),

    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
