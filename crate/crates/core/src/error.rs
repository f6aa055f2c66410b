//! Error type shared across the crate.

use thiserror::Error;

/// Everything that can go wrong in the solver and its harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("domain mismatch between operands")]
    DomainMismatch,

    #[error("array shape {got:?} does not match domain ({want} x {want})")]
    ShapeMismatch { want: usize, got: (usize, usize) },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("multiplier evaluates to a non-finite value at occupied eigenvalue {eigenvalue}")]
    NonFiniteMultiplier { eigenvalue: f64 },

    #[error("invalid Lebesgue exponent p = {0}; require p >= 1 (or infinity)")]
    InvalidExponent(f64),

    #[error("invalid Besov index: {0}")]
    InvalidBesovIndex(String),

    #[error("norm equivalence holds for |s - 2| < 1 only; got s = {0}")]
    EquivalenceRange(f64),

    #[error("trajectory is empty")]
    EmptyTrajectory,

    #[error("invalid solver configuration: {0}")]
    InvalidSolverConfig(String),

    #[error("invalid nonlinearity configuration: {0}")]
    InvalidNonlinearity(String),

    #[error(
        "Picard iteration did not converge at t = {t} within {max_iter} iterations \
         (window already at the dt floor); decrease the window or dt, or increase mu"
    )]
    PicardNonConvergence { t: f64, max_iter: usize },

    #[error("blow-up abort at t = {t}: |grad theta|_inf = {grad_linf:e} exceeds ceiling {ceiling:e}")]
    BlowUp { t: f64, grad_linf: f64, ceiling: f64 },

    #[error("non-finite state during time stepping at t = {0}")]
    NonFiniteState(f64),

    #[error("invalid ensemble specification: {0}")]
    InvalidEnsemble(String),

    #[error("estimate hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("config parse error in {path}: {message}")]
    ConfigParse { path: String, message: String },

    #[error("config constraint violated: field `{field}`: {message}")]
    ConfigConstraint { field: String, message: String },

    #[error("file format error in {path}: {message}")]
    FileFormat { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
