//! Error types shared across the toolkit.

use thiserror::Error;

/// Unified error type for all toolkit operations.
#[derive(Debug, Error)]
pub enum Error {
    /// A state, mask or gauge has the wrong length for the instance it is
    /// paired with.
    #[error("dimension mismatch: expected length {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// A parameter is outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A size guard was exceeded (exhaustive enumeration, dense dynamics).
    #[error("{what}: {requested} sites exceeds the supported limit of {limit}")]
    CapabilityExceeded {
        what: &'static str,
        limit: usize,
        requested: usize,
    },

    /// An instance file could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// The gap to the ground state is below the degeneracy tolerance, so the
    /// adiabatic ratio is undefined.
    #[error("degenerate gap {gap:e} below tolerance")]
    DegenerateGap { gap: f64 },

    /// A sampler call failed inside a protocol iteration.
    #[error("sampler failed at iteration {iteration}: {source}")]
    SamplerFailed {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
