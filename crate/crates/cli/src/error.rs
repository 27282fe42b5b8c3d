use std::fmt;

/// Failure of a command, carrying the process exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    /// Bad flag, config key or value.
    Usage(String),
    /// `m` is too small for the requested lift height.
    Guard(String),
    /// A checked inequality failed.
    Property(String),
    /// A Monte Carlo estimate disagrees with its closed form.
    Statistical(String),
    Io(std::io::Error),
    Core(tessellate::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 64,
            CliError::Guard(_) => 65,
            CliError::Property(_) => 2,
            CliError::Statistical(_) => 3,
            CliError::Io(_) => 74,
            CliError::Core(e) => match e {
                tessellate::Error::BudgetGuard { .. } => 65,
                tessellate::Error::InvalidParameter { .. }
                | tessellate::Error::Parse(_)
                | tessellate::Error::DimensionMismatch { .. }
                | tessellate::Error::Unsupported { .. } => 64,
                tessellate::Error::Hypothesis(_) => 2,
                _ => 1,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Guard(m) => write!(f, "guard violated: {m}"),
            CliError::Property(m) => write!(f, "property violated: {m}"),
            CliError::Statistical(m) => write!(f, "statistical disagreement: {m}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<tessellate::Error> for CliError {
    fn from(e: tessellate::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;
