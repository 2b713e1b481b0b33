use thiserror::Error;

/// Errors produced by the algebra, factorization, simulation and estimation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("singular evaluation: pole on the unit circle at angle {angle}")]
    SingularEvaluation { angle: f64 },

    #[error("root finding failed: {0}")]
    RootFinding(String),

    #[error("indeterminate zero on the unit circle: {re}{im:+}i")]
    IndeterminateZero { re: f64, im: f64 },

    #[error("ill-posed feedback loop: 1 - F H vanishes identically")]
    SingularLoop,

    #[error("causal projection undefined: pole on the unit circle at {re}{im:+}i")]
    SingularProjection { re: f64, im: f64 },

    #[error("non-finite filter output at sample {sample}")]
    NonFiniteOutput { sample: usize },

    #[error("numeric factorization failed: {0}")]
    NumericFactorization(String),

    #[error("inputs inconsistent with a low-rank model: {0}")]
    Inconsistent(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    /// Stable machine-readable code, used in CSV status columns and error reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid_input",
            Error::SingularEvaluation { .. } => "singular_evaluation",
            Error::RootFinding(_) => "root_finding",
            Error::IndeterminateZero { .. } => "indeterminate_zero",
            Error::SingularLoop => "singular_loop",
            Error::SingularProjection { .. } => "singular_projection",
            Error::NonFiniteOutput { .. } => "non_finite_output",
            Error::NumericFactorization(_) => "numeric_factorization",
            Error::Inconsistent(_) => "inconsistent",
            Error::Unsupported(_) => "unsupported",
            Error::Config(_) => "config",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
