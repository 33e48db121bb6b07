use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A `CantorSpec` or raw potential table violates its invariants.
    InvalidPotential(String),
    /// `mu` is not a positive finite number.
    InvalidParams(String),
    /// A grid with no interior nodes.
    InvalidGrid,
    /// An argument outside the domain of an operation.
    Domain(String),
    /// Inverse iteration did not reach the residual target.
    NoConvergence { iterations: usize, residual: f64 },
    /// The energy handed to the eigenfunction builder is not an eigenvalue.
    StaleEigenvalue { energy: f64, mismatch: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidPotential(msg) => write!(f, "invalid potential: {msg}"),
            Error::InvalidParams(msg) => write!(f, "invalid model parameters: {msg}"),
            Error::InvalidGrid => f.write_str("grid must have at least one interior node"),
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::NoConvergence {
                iterations,
                residual,
            } => write!(
                f,
                "inverse iteration did not converge after {iterations} iterations \
                 (final residual {residual:e})"
            ),
            Error::StaleEigenvalue { energy, mismatch } => write!(
                f,
                "energy {energy} is not a converged eigenvalue (boundary mismatch {mismatch:e})"
            ),
        }
    }
}

impl core::error::Error for Error {}
