use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Errors raised by oracles, parameter derivation, and the solvers.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// A vector or matrix had the wrong shape.
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    /// An oracle returned a NaN or infinite value at `x`.
    OracleFailure { what: &'static str, x: Vec<f64> },
    /// Invalid algorithm parameter.
    Parameter(String),
    /// Problem or run configuration cannot be used as given.
    Configuration(String),
    /// A point lies outside the regularizer domain.
    Domain { coordinate: usize, value: f64 },
    /// Iterates became non-finite at the given iteration.
    Divergence { iteration: usize },
    /// A multiplier construction produced a coordinate below `-1e-10`,
    /// meaning its inputs did not come from the matching slack update.
    Precondition {
        what: &'static str,
        coordinate: usize,
        value: f64,
    },
    /// A library problem could not be built from the given data.
    Construction(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { what, expected, found } => {
                write!(f, "{what}: expected length {expected}, found {found}")
            }
            Error::OracleFailure { what, x } => {
                write!(f, "{what} oracle returned a non-finite value at x = {x:?}")
            }
            Error::Parameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::Configuration(msg) => write!(f, "configuration error: {msg}"),
            Error::Domain { coordinate, value } => write!(
                f,
                "point outside regularizer domain (coordinate {coordinate} = {value})"
            ),
            Error::Divergence { iteration } => {
                write!(f, "iterates became non-finite at iteration {iteration}")
            }
            Error::Precondition {
                what,
                coordinate,
                value,
            } => write!(
                f,
                "{what}: coordinate {coordinate} is {value:e} < -1e-10 (mismatched inputs)"
            ),
            Error::Construction(msg) => write!(f, "problem construction failed: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { what, expected, found })
    }
}
