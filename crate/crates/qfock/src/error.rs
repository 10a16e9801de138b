//! Error type shared across the crate.

use thiserror::Error;

/// Errors surfaced by scalar arithmetic, series evaluation, and the
/// verification machinery.
#[derive(Debug, Error)]
pub enum Error {
    /// Division by the zero polynomial or zero scalar.
    #[error("division by zero: {0}")]
    DivisionByZero(&'static str),

    /// A rational function was evaluated at a zero of its denominator.
    #[error("denominator vanishes at q = {q0}")]
    PoleAt { q0: f64 },

    /// Operation is not available in the requested mode (e.g. an infinite
    /// product in exact mode, or a (1-q) division at q = 1).
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// An argument lies outside the domain of the function being evaluated.
    #[error("outside domain: {0}")]
    Domain(String),

    /// A truncated sum failed to satisfy its convergence monitor.
    #[error("series did not converge after {terms} terms ({context})")]
    Divergent { terms: usize, context: String },

    /// Grid functions with incompatible grids were combined.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// The defect operator of a candidate realization had an eigenvalue
    /// below the PSD tolerance.
    #[error("defect operator is not PSD within tolerance (min eigenvalue {min_eigenvalue:e})")]
    DefectNotPsd { min_eigenvalue: f64 },

    /// A linear system that should be regular turned out singular.
    #[error("singular system: {0}")]
    SingularSystem(&'static str),

    /// A caller-supplied parameter was rejected.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
