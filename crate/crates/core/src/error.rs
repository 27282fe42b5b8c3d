use alloc::string::String;

/// Errors raised by the tessellation toolkit.
///
/// Contract violations (dimension mismatches, out-of-range parameters) are
/// reported rather than panicking so the CLI can map them onto exit codes.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("operation `{op}` is not supported for set `{set}`")]
    Unsupported { op: &'static str, set: String },

    #[error("only {found} shifts fall below the threshold {threshold}, need {needed}")]
    SelectionFailed {
        found: usize,
        needed: usize,
        threshold: f64,
    },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("hyperplane budget guard violated: m = {m} is not larger than lambda/2 = {half_lambda}")]
    BudgetGuard { m: usize, half_lambda: f64 },

    #[error("linear system is singular or not positive definite")]
    Singular,

    #[error("cannot parse set description: {0}")]
    Parse(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
