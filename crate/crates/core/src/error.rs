use thiserror::Error;

/// Everything that can go wrong inside the library.
///
/// Variants are split so that front ends can tell bad input (the caller's
/// fault) apart from numerical breakdown; see [`Error::is_user_error`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("probability {0} is outside the allowed range")]
    ProbabilityDomain(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("outside the supported range: {0}")]
    OutOfRange(String),

    #[error("matrix is not positive semidefinite (eigenvalue {min_eigenvalue:e} vs largest {max_eigenvalue:e})")]
    NotPositiveSemidefinite {
        min_eigenvalue: f64,
        max_eigenvalue: f64,
    },

    #[error("{0} does not have full column rank")]
    RankDeficient(&'static str),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("condition number undefined: the difference matrix has a zero singular value")]
    ConditionUndefined,

    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    #[error("logistic MLE diverged (parameter norm {norm:.3e}); the data look linearly separable")]
    Separation { norm: f64 },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("I/O error: {0}")]
    Io(String),
}

impl Error {
    /// True when the error was caused by invalid input rather than by a
    /// numerical failure on valid input.
    pub fn is_user_error(&self) -> bool {
        matches!(
            self,
            Error::ProbabilityDomain(_)
                | Error::InvalidArgument(_)
                | Error::DimensionMismatch { .. }
                | Error::RankDeficient(_)
                | Error::Io(_)
        )
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { what, expected, got })
    }
}
