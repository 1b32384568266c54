use thiserror::Error;

/// Errors produced by solvers, diagnostics and problem builders.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("point is infeasible for {set} (violation {violation:.3e})")]
    Infeasible { set: &'static str, violation: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("inner solver did not reach {target:.3e} within {iterations} iterations (certificate {certificate:.3e})")]
    NonconvergedInner {
        certificate: f64,
        target: f64,
        iterations: usize,
    },

    #[error("iteration budget of {iterations} exhausted in {context} (certificate {certificate:.3e})")]
    BudgetExhausted {
        context: &'static str,
        iterations: usize,
        certificate: f64,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("{0}")]
    InsufficientData(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            got,
        })
    }
}
