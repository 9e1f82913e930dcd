//! Error types shared across the crate.

use thiserror::Error;

/// Errors raised by model construction, filtering, estimation and scheduling.
#[derive(Debug, Error)]
pub enum Error {
    /// Bad configuration: mismatched dimensions, malformed matrices, unknown names.
    #[error("configuration error: {0}")]
    Config(String),

    /// Sensor index outside `0..N`.
    #[error("sensor index {index} out of range (N = {count})")]
    SensorIndex { index: usize, count: usize },

    /// A covariance matrix failed the positive-semidefinite check.
    #[error("covariance is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    /// Innovation variance too small to invert; the filter configuration is singular.
    #[error("degenerate update: innovation variance {variance:.3e} below threshold")]
    DegenerateUpdate { variance: f64 },

    /// A query is malformed or incompatible with the state dimension.
    #[error("invalid query: {0}")]
    InvalidQuery(String),

    /// Generic invalid argument (zero sample counts, non-positive temperatures, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Numeric failure: NaN inputs, non-convergent iterations.
    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
