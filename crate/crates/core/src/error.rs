use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {op}: expected {expected}, found {found}")]
    Dimension {
        op: &'static str,
        expected: String,
        found: String,
    },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("power iteration did not converge after {iterations} iterations (last estimate {last_estimate})")]
    Convergence {
        iterations: usize,
        last_estimate: f64,
    },

    /// The Lyapunov operator is singular: two eigenvalues sum to zero.
    #[error("marginal spectrum: Lyapunov system is singular")]
    MarginalSpectrum,

    #[error("matrix is not Hurwitz")]
    NotHurwitz,

    #[error("{0}")]
    Domain(String),

    #[error("{0}")]
    OutOfRange(String),
}

impl Error {
    pub(crate) fn dim(op: &'static str, expected: impl ToString, found: impl ToString) -> Self {
        Error::Dimension {
            op,
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
