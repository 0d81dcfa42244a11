use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument fell outside the domain of the function.
    Domain { what: &'static str, value: f64 },
    /// Derivative requested at the kink of the classic penalty.
    Kink { pi: f64 },
    /// An iterative solver exhausted its iteration budget.
    Convergence { iterations: usize },
    /// The control set violates its invariants.
    InvalidControlSet(String),
    /// The running-cost model is malformed or cannot be evaluated.
    InvalidCost(String),
    /// The simulation configuration is inconsistent.
    Config(String),
    /// The operation does not apply to the given solution.
    NotApplicable(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Domain { what, value } => write!(f, "{what} out of domain: {value}"),
            Self::Kink { pi } => write!(f, "penalty is not differentiable at {pi}"),
            Self::Convergence { iterations } => {
                write!(f, "no convergence after {iterations} iterations")
            }
            Self::InvalidControlSet(msg) => write!(f, "invalid control set: {msg}"),
            Self::InvalidCost(msg) => write!(f, "invalid cost model: {msg}"),
            Self::Config(msg) => write!(f, "invalid simulation config: {msg}"),
            Self::NotApplicable(msg) => write!(f, "not applicable: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn check_open_unit(what: &'static str, pi: f64) -> Result<()> {
    if pi > 0.0 && pi < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain { what, value: pi })
    }
}
