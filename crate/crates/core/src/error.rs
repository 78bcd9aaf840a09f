use thiserror::Error;

/// Errors produced by the samplers and their supporting numerics.
#[derive(Debug, Error)]
pub enum Error {
    /// A distribution or configuration parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Inputs violate a structural precondition (dimensions, ordering, labels).
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical operation failed (e.g. a Cholesky factorization).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A series with zero variance cannot be summarized.
    #[error("degenerate series")]
    DegenerateSeries,
}

pub type Result<T> = std::result::Result<T, Error>;
