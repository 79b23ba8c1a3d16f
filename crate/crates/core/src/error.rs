use alloc::string::String;
use core::fmt;

/// Errors shared by all modules of the crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter violates a documented precondition.
    InvalidParameter(String),
    /// A 1-based site or mode index is out of range.
    IndexOutOfRange { index: usize, len: usize },
    /// Two containers that must agree in dimension do not.
    ShapeMismatch { expected: usize, found: usize },
    /// An input is outside the domain of the operation (NaN/Inf, etc.).
    Domain(String),
    /// Adaptive step-size control underflowed; carries the time reached.
    IntegrationFailure { t_reached: f64 },
    /// A bisection bracket does not straddle the predicate change.
    Bracketing(String),
    /// The Fock-space cutoff leaves too much coherent-state tail mass.
    CutoffTooSmall { tail_mass: f64, bound: f64 },
    /// A numerically evaluated metric came out non-positive.
    NumericalDegeneracy(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::IndexOutOfRange { index, len } => {
                write!(f, "index {index} out of range for length {len}")
            }
            Error::ShapeMismatch { expected, found } => {
                write!(f, "shape mismatch: expected {expected}, found {found}")
            }
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::IntegrationFailure { t_reached } => {
                write!(f, "integration failed: step size underflow at t = {t_reached}")
            }
            Error::Bracketing(msg) => write!(f, "bracketing error: {msg}"),
            Error::CutoffTooSmall { tail_mass, bound } => {
                write!(f, "cutoff too small: tail mass {tail_mass:e} exceeds bound {bound:e}")
            }
            Error::NumericalDegeneracy(msg) => write!(f, "numerical degeneracy: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
