use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Errors raised while building the system model or solving a design.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A scalar parameter is outside its admissible range.
    InvalidParameter { name: &'static str, reason: String },
    /// Two operands disagree on shape.
    DimensionMismatch {
        context: &'static str,
        expected: (usize, usize),
        found: (usize, usize),
    },
    /// A matrix that must be symmetric is not.
    NotSymmetric { asymmetry: f64 },
    /// A data symbol does not have unit modulus.
    InvalidSymbol { index: usize, modulus: f64 },
    /// The window cannot be built for the requested dimensions.
    WindowUnavailable { reason: String },
    /// A Hessian could not be factored even after regularization.
    IllConditioned { context: &'static str, detail: String },
    /// The constraint set is empty.
    Infeasible {
        /// Smallest energy needed to meet the constructive-interference
        /// constraints, when it could be computed.
        min_energy: Option<f64>,
        /// Energy budget that was requested.
        budget: Option<f64>,
    },
    /// An outer iteration increased the objective beyond tolerance.
    NonMonotone {
        iteration: usize,
        previous: f64,
        current: f64,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter { name, reason } => {
                write!(f, "invalid parameter `{name}`: {reason}")
            }
            Error::DimensionMismatch {
                context,
                expected,
                found,
            } => write!(
                f,
                "{context}: expected {}x{}, found {}x{}",
                expected.0, expected.1, found.0, found.1
            ),
            Error::NotSymmetric { asymmetry } => {
                write!(f, "matrix is not symmetric (max asymmetry {asymmetry:e})")
            }
            Error::InvalidSymbol { index, modulus } => {
                write!(f, "symbol {index} has modulus {modulus}, expected 1")
            }
            Error::WindowUnavailable { reason } => write!(f, "window unavailable: {reason}"),
            Error::IllConditioned { context, detail } => {
                write!(f, "{context}: ill-conditioned Hessian ({detail})")
            }
            Error::Infeasible { min_energy, budget } => {
                write!(f, "constraint set is empty")?;
                match (min_energy, budget) {
                    (Some(e), Some(b)) => write!(
                        f,
                        "; meeting the QoS targets needs energy {e:.6e} but the budget is {b:.6e}"
                    ),
                    (Some(e), None) => write!(f, "; minimum feasible energy {e:.6e}"),
                    _ => write!(f, "; the constructive-interference polytope is empty"),
                }
            }
            Error::NonMonotone {
                iteration,
                previous,
                current,
            } => write!(
                f,
                "objective increased at iteration {iteration}: {previous:e} -> {current:e}"
            ),
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn check_shape(
    context: &'static str,
    expected: (usize, usize),
    found: (usize, usize),
) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}
