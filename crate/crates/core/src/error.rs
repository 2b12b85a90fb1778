use thiserror::Error;

/// Error type shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Inconsistent geometry or parameters (non-divisible strides, bad density, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// Tensor shapes that cannot be combined.
    #[error("shape error: {0}")]
    Shape(String),

    /// Coordinate outside the (padded) frame.
    #[error("index error: {0}")]
    Index(String),

    /// Valid request that the algorithm deliberately does not serve
    /// (strides > 1 or pointwise kernels on the sparse paths).
    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    /// Malformed encoded streams: bad sentinels, decreasing cumulative
    /// counts, or data/index desynchronization.
    #[error("corrupt encoding: {0}")]
    Corrupt(String),

    /// API misuse, e.g. a lowered matrix fed to the wrong multiplier.
    #[error("usage error: {0}")]
    Usage(String),

    /// Unparseable or truncated on-disk artifact.
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
