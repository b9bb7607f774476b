use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Error type shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A shape or scene parameter violates its preconditions.
    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    /// An analytic formula was evaluated outside its domain of validity.
    #[error("domain error: {0}")]
    Domain(String),

    /// Influence-matrix assembly failed (degenerate or overlapping panels,
    /// or the panel count exceeds the configured cap).
    #[error("assembly error: {0}")]
    Assembly(String),

    /// The linear solve failed (singular matrix or iterative non-convergence).
    #[error("solver error: {0}")]
    Solver(String),

    /// An operation was asked to run on a geometry it does not support.
    #[error("unsupported geometry: {0}")]
    UnsupportedGeometry(String),

    /// Too few samples for the requested stencil or fit.
    #[error("insufficient points: {0}")]
    InsufficientPoints(String),

    /// Nonlinear fit did not converge; diagnostics carry the partial state.
    #[error("fit did not converge: {0}")]
    FitNonConvergence(String),

    /// A distance sweep had unrecoverable per-distance failures. The
    /// successfully solved `(d, C)` samples ride along for partial output.
    #[error("sweep failed at {} of {total} distances: {summary}", failures.len())]
    Sweep {
        failures: Vec<(f64, String)>,
        partial: Vec<(f64, f64)>,
        total: usize,
        summary: String,
    },

    /// Malformed input file (CSV or similar); the message names the line.
    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid_spec(msg: impl Into<String>) -> Self {
        Error::InvalidSpec(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
