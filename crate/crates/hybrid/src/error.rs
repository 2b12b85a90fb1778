use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown network {0:?}")]
    UnknownNetwork(String),

    #[error("incomplete profile: {0}")]
    IncompleteProfile(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Core(#[from] cpoconv::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
