//! Crate-wide error type.
//!
//! Numerical failures carry the index where the factorization or iteration
//! broke down so callers can report *which* stencil, pivot, or matrix row is
//! responsible rather than a bare "solve failed".

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Symmetric factorization hit a non-positive pivot. For plain Cholesky
    /// `pivot` is the failing diagonal position; for pivoted Cholesky it is the
    /// step at which the remaining diagonal fell below tolerance.
    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    /// Sparse or dense LU found no usable pivot for this row.
    #[error("matrix is singular (row {row})")]
    Singular { row: usize },

    /// Backend factorization failed without a specific row attribution.
    #[error("factorization failed: {0}")]
    Factorization(String),

    /// Power / inverse iteration did not reach the requested tolerance.
    #[error("eigenvalue iteration did not converge within {iterations} iterations")]
    EigenNoConvergence { iterations: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Kernel shape parameters must be strictly positive.
    #[error("invalid shape parameter {0} (must be finite and > 0)")]
    InvalidShapeParameter(f64),

    /// Requested a derivative the kernel cannot provide at this point
    /// (e.g. the second derivative of the thin-plate spline at its center).
    #[error("invalid derivative request: {0}")]
    InvalidDerivative(&'static str),

    #[error("geometry error: {0}")]
    Geometry(String),

    /// Greedy node selection ran out of numerically independent candidates
    /// before reaching the requested count.
    #[error("node selection exhausted after {selected} of {requested} points (pivot diagonal below threshold)")]
    SelectionExhausted { selected: usize, requested: usize },

    /// A local stencil interpolation matrix could not be factorized.
    #[error("local weight factorization failed at node {master}")]
    WeightFactorization { master: usize },

    /// The reduced normal-equations matrix is numerically rank deficient.
    #[error("reduced system is degenerate (condition estimate {cond_estimate:.3e})")]
    DegenerateReducedSystem { cond_estimate: f64 },

    /// The precomputed residual tables produced a squared norm more negative
    /// than roundoff can explain.
    #[error("residual table evaluated to {value:.3e} (scale {scale:.3e}); tables are inconsistent")]
    NegativeResidual { value: f64, scale: f64 },

    /// A solution fails its post-solve residual validation.
    #[error("solution rejected: relative residual {residual:.3e} exceeds {limit:.3e}")]
    ResidualValidation { residual: f64, limit: f64 },

    #[error("empty basis: no snapshots survived orthonormalization")]
    EmptyBasis,

    #[error("unknown problem {0:?}")]
    UnknownProblem(String),

    #[error("unknown kernel {0:?}")]
    UnknownKernel(String),

    #[error("model file format error: {0}")]
    ModelFormat(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad user input (configuration, unknown names)
    /// rather than numerical failure; the CLI maps these to a distinct exit code.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::UnknownProblem(_) | Error::UnknownKernel(_)
        )
    }
}
