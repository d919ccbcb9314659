use thiserror::Error;

/// Errors raised anywhere in the library.
///
/// The CLI maps each variant onto a fixed exit code (see [`HkError::exit_code`]).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum HkError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("regime error: {0}")]
    Regime(String),

    #[error("quadrature did not converge: value {value:e}, error estimate {abs_err:e}")]
    Quadrature { value: f64, abs_err: f64 },

    /// The two contour runs (N and 2N initial panels) disagree.
    #[error("inversion did not converge: {value_n:e} (N) vs {value_2n:e} (2N)")]
    Inversion { value_n: f64, value_2n: f64 },

    /// The Hunt subtraction lost all digits; the value is only known to lie in `[0, upper]`.
    #[error("cancellation: killed kernel only bracketed in [0, {upper:e}]")]
    Cancellation { upper: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("empty grid: {0}")]
    EmptyGrid(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("baseline missing: {0}")]
    BaselineMissing(String),

    #[error("verification failed: {0}")]
    Verification(String),
}

impl HkError {
    /// Process exit code used by the `hk` binary.
    pub fn exit_code(&self) -> i32 {
        match self {
            HkError::Config(_) | HkError::Regime(_) => 2,
            HkError::Domain(_) | HkError::Overflow(_) | HkError::EmptyGrid(_) => 3,
            HkError::Quadrature { .. }
            | HkError::Inversion { .. }
            | HkError::Cancellation { .. }
            | HkError::Verification(_) => 4,
            HkError::Io(_) => 5,
            HkError::BaselineMissing(_) => 6,
        }
    }
}

impl From<std::io::Error> for HkError {
    fn from(e: std::io::Error) -> Self {
        HkError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, HkError>;

/// Rejects non-finite or out-of-range arguments with a uniform message.
pub(crate) fn require(cond: bool, what: &str, value: f64) -> Result<()> {
    if cond && value.is_finite() {
        Ok(())
    } else {
        Err(HkError::Domain(format!("{what} (got {value})")))
    }
}
