use thiserror::Error;

/// Errors produced by the solvers, factorizations and identity checks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is not positive definite: pivot {index} is {pivot:e}")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("search direction is zero")]
    DegenerateDirection,

    #[error("directions {i} and {j} are not A-conjugate (relative deviation {deviation:e})")]
    NotConjugate { i: usize, j: usize, deviation: f64 },

    #[error("incomplete basis: need {expected} conjugate directions, got {found}")]
    IncompleteBasis { expected: usize, found: usize },

    #[error("plane vectors are not orthogonal (relative u^T v = {deviation:e})")]
    NotOrthogonal { deviation: f64 },

    #[error("curvature condition violated at step {step}: s^T y = {value:e}")]
    Curvature { step: usize, value: f64 },

    #[error("starting vector is zero")]
    EmptyStart,

    #[error("Lanczos breakdown at step {step} while residual is still {residual:e}")]
    PrematureBreakdown { step: usize, residual: f64 },

    #[error("p^T A p = {value:e} at step {step}")]
    Breakdown { step: usize, value: f64 },

    #[error("identity not applicable: {0}")]
    NotApplicable(String),

    #[error("invalid trace: {0}")]
    InvalidTrace(String),

    #[error("requested degree {requested} but coefficients only support {available}")]
    InsufficientCoefficients { requested: usize, available: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("writing output: {0}")]
    Output(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
