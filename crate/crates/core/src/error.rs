use thiserror::Error;

/// Errors raised by the design, analysis and simulation routines.
///
/// Numeric payloads are carried as `f64` regardless of the scalar type the
/// computation ran in, so the error type stays non-generic.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        found: String,
    },

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("matrix is not stable: spectral abscissa {max_real:.6e} >= 0")]
    NotStable { max_real: f64 },

    #[error("pair (A, B) is not stabilizable: uncontrollable eigenvalue {re:.6e}{im:+.6e}j")]
    NotStabilizable { re: f64, im: f64 },

    #[error("pair (Q, A) is not detectable: unobservable eigenvalue {re:.6e}{im:+.6e}j")]
    NotDetectable { re: f64, im: f64 },

    #[error("{solver} failed to converge after {iterations} iterations (best residual {best_residual:.3e})")]
    ConvergenceFailure {
        solver: &'static str,
        iterations: usize,
        best_residual: f64,
    },

    #[error("matrix is singular or not positive definite: {0}")]
    Singular(&'static str),

    #[error("transfer function is improper: numerator degree {num_degree} > denominator degree {den_degree}")]
    ImproperTransferFunction { num_degree: usize, den_degree: usize },

    #[error("invalid transfer function: {0}")]
    InvalidTransferFunction(&'static str),

    #[error("feedback interconnection has an algebraic loop (I + D_G D_K is singular)")]
    AlgebraicLoop,

    #[error("system is singular at omega = {omega:.6e} rad/s (j*omega is a pole)")]
    SingularAtFrequency { omega: f64 },

    #[error("system is unstable (spectral abscissa {max_real:.6e})")]
    UnstableSystem { max_real: f64 },

    #[error("closed loop is unstable; offending eigenvalues: {eigenvalues:?}")]
    UnstableClosedLoop { eigenvalues: Vec<(f64, f64)> },

    #[error("invalid frequency grid: {0}")]
    InvalidGrid(&'static str),

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("gramian is nearly singular: retained Hankel value {value:.3e} < {threshold:.3e}")]
    NearSingularGramian { value: f64, threshold: f64 },

    #[error("bilinear transform is singular (I - Ts/2 A not invertible)")]
    SingularTransformation,

    #[error("simulation diverged at t = {time:.6} s")]
    NumericalBlowup { time: f64 },

    #[error("closed loop is unstable; swept-sine identification is not possible")]
    UnstableLoop,

    #[error("insufficient steady-state cycles: {steady} < 10")]
    InsufficientCycles { steady: usize },

    #[error("extended Kalman filter diverged: covariance trace increased over {fraction:.1}% of the run")]
    DivergedFilter { fraction: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dim_err(context: &'static str, expected: impl ToString, found: impl ToString) -> Error {
    Error::DimensionMismatch {
        context,
        expected: expected.to_string(),
        found: found.to_string(),
    }
}
