use alloc::string::String;

/// Errors raised anywhere in the certification core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("domain error in {op}")]
    Domain { op: &'static str },

    #[error("not differentiable: {0}")]
    NotDifferentiable(&'static str),

    #[error("syntax error at column {column}: {message}")]
    Syntax { column: usize, message: String },

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("no region covers the point")]
    CoverageViolation,

    #[error("ambiguous region at an unforced step")]
    Tie,

    #[error("more than {0} branch sequences")]
    BranchOverflow(usize),

    #[error("forced region {0} is not active at the point")]
    ForcedRegionInactive(usize),

    #[error("operation requires a {0} system")]
    WrongMode(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is singular")]
    Singular,

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("linearization is not Schur stable")]
    NotLocallyStable,

    #[error("origin is not an equilibrium (residual {0:e})")]
    NotEquilibrium(f64),

    #[error("no common quadratic Lyapunov function found for the linearizations; supply P_L manually")]
    NoCommonLyapunov,
}

pub type Result<T> = core::result::Result<T, Error>;
