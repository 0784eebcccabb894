use thiserror::Error;

/// Errors raised by the encoders, decoders and numeric engines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("compression depth {0} out of range (need 1 <= d and 2^d < q)")]
    InvalidDepth(u32),

    #[error("value {value} out of range [0, {bound})")]
    OutOfRange { value: i64, bound: i64 },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid parameter set: {0}")]
    InvalidParams(String),

    #[error("singular matrix")]
    SingularMatrix,

    #[error("no lattice point within radius {0}")]
    NoPointInRadius(f64),

    #[error("BCH decoding failure")]
    DecodeFailure,

    #[error("series did not converge: {0}")]
    NonConvergence(String),

    #[error("invalid encoder configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed encoding: {0}")]
    Malformed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
