//! Error type shared by the whole crate.

/// Failure modes of the exponent algebra and the numerical kernels.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// The exponent ordering 1 < q < p < N (and friends) is violated.
    #[error("exponent order violated: {0}")]
    ExponentOrder(String),
    /// A parameter lies outside its admissible range.
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    /// An operation was called outside its stated precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// Composite quadrature could not reach the requested accuracy.
    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),
    /// A rate fit needs more samples or a wider scale range.
    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),
    /// The regression problem is singular.
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    /// Root bracketing for the fibering map failed.
    #[error("bracketing failure: {0}")]
    BracketFailure(String),
    /// An iterative solver hit its iteration cap or diverged.
    #[error("no convergence: {0}")]
    NonConvergence(String),
    /// A quotient was requested with a vanishing denominator.
    #[error("degenerate division: {0}")]
    DivisionDegenerate(String),
    /// A profile that must be strictly monotone is not.
    #[error("profile not monotone: {0}")]
    NonMonotone(String),
}

pub type Result<T> = std::result::Result<T, Error>;
