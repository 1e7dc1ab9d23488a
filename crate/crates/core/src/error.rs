use thiserror::Error;

/// Errors raised by the evaluators, solvers and walkers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FracError {
    #[error("fractional order must lie strictly inside (0, 1), got {0}")]
    InvalidOrder(f64),
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("unsupported dimension {0}; only n = 1 and n = 2 are implemented")]
    UnsupportedDimension(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("summability violated: growth exponent {growth} is not below {limit}")]
    Summability { growth: f64, limit: f64 },
    #[error("tolerance not reached: value {value:e}, achieved error {achieved:e}, requested {requested:e}")]
    ToleranceNotReached {
        value: f64,
        achieved: f64,
        requested: f64,
    },
    #[error("point {0} lies outside the domain")]
    OutsideDomain(f64),
    #[error("basis mismatch: expected {expected}, found {found}")]
    BasisMismatch {
        expected: &'static str,
        found: &'static str,
    },
    #[error("time must be nonnegative, got {0}")]
    NegativeTime(f64),
    #[error("time grid is not uniform")]
    NonUniformGrid,
    #[error("extrapolation did not converge; successive residuals {0:?}")]
    ExtrapolationFailed(Vec<f64>),
    #[error("degenerate kernel matrix at a quadrature node: |M y| / |y| = {0:e}")]
    DegenerateKernel(f64),
    #[error("density has nonpositive mass {0}")]
    NegativeMass(f64),
    #[error("ensemble is empty")]
    EmptyEnsemble,
    #[error("non-finite integrand value at {0}")]
    NonFinite(f64),
}

pub type Result<T> = std::result::Result<T, FracError>;
