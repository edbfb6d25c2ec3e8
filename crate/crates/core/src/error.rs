use thiserror::Error;

use crate::expr::{EvalError, ParseError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("x = {x} lies outside the domain [0, {length}]")]
    OutOfDomain { x: f64, length: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("decomposition: {0}")]
    Decomposition(String),
    #[error("integrator: step size {h:e} underflowed at x = {x}")]
    StepUnderflow { x: f64, h: f64 },
    #[error("integrator: exceeded {0} steps")]
    TooManySteps(usize),
    #[error("no eigenvalue bracket below lambda = {limit:e} (weight effectively zero)")]
    EigenBracket { limit: f64 },
    #[error("nonlinearity: g(0) = {0}, expected 0")]
    NonZeroAtOrigin(f64),
    #[error("nonlinearity: g({s}) = {value} is not positive")]
    NonPositive { s: f64, value: f64 },
    #[error("no admissible r: g(s)/s exceeds {bound} on every candidate interval")]
    NoAdmissibleR { bound: f64 },
    #[error("radial residual {residual:e} exceeds {bound:e} at r = {r}")]
    ResidualViolation { r: f64, residual: f64, bound: f64 },
}

impl Error {
    /// Name of the module family an error originates from, used when
    /// surfacing numeric failures on the command line.
    pub fn module(&self) -> &'static str {
        match self {
            Error::Parse(_) | Error::Eval(_) => "expr",
            Error::OutOfDomain { .. } | Error::Decomposition(_) => "weights",
            Error::StepUnderflow { .. } | Error::TooManySteps(_) => "shooting",
            Error::EigenBracket { .. } | Error::NonPositive { .. } => "eigen",
            Error::NonZeroAtOrigin(_) => "shooting",
            Error::NoAdmissibleR { .. } => "multiplicity",
            Error::ResidualViolation { .. } => "radial",
            Error::InvalidArgument(_) => "input",
        }
    }
}
