//! Crate-wide error type.

use std::fmt;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone)]
pub enum Error {
    /// Matrix construction or shape violation.
    Shape(String),
    /// Non-finite entries where finite values are required.
    NonFinite(String),
    /// A scalar parameter is outside its admissible range.
    InvalidParameter(String),
    /// Input must be symmetric within tolerance but is not.
    NotSymmetric { deviation: f64 },
    /// Iterative routine failed to converge within its iteration cap.
    NoConvergence { what: &'static str, residual: f64, iterations: usize },
    /// Combinatorial enumeration guard exceeded; caller should use the TPI path.
    EnumerationGuard { candidates: f64, limit: f64 },
    /// Working-set solver exhausted its outer iteration budget.
    OuterIterationsExceeded { objective: f64, certificate: f64 },
    /// A statistical-dimension repeat failed; carries the NMSE values gathered so far.
    RepeatFailed { repeat: usize, partial: Vec<f64>, message: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Shape(m) => write!(f, "shape error: {m}"),
            Error::NonFinite(m) => write!(f, "non-finite values: {m}"),
            Error::InvalidParameter(m) => write!(f, "invalid parameter: {m}"),
            Error::NotSymmetric { deviation } => {
                write!(f, "matrix is not symmetric (max |A - A^T| = {deviation:.3e})")
            }
            Error::NoConvergence { what, residual, iterations } => {
                write!(f, "{what} did not converge after {iterations} iterations (residual {residual:.3e})")
            }
            Error::EnumerationGuard { candidates, limit } => {
                write!(f, "enumeration guard: {candidates:.3e} candidate blocks exceeds limit {limit:.3e}; use the TPI path")
            }
            Error::OuterIterationsExceeded { objective, certificate } => {
                write!(f, "working-set solver exceeded max outer iterations (objective {objective:.6e}, last certificate {certificate:.6e})")
            }
            Error::RepeatFailed { repeat, message, partial } => {
                write!(f, "repeat {repeat} failed after {} successful repeats: {message}", partial.len())
            }
        }
    }
}

impl std::error::Error for Error {}
