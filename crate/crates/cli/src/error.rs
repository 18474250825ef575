use std::fmt;

use qib_core::Error as CoreError;

/// Exit codes: 0 ok, 1 verification failure, 2 usage, 3 degenerate input,
/// 4 solver infeasibility.
#[derive(Debug)]
pub enum CliError {
    Verify(String),
    Usage(String),
    Degenerate(String),
    Infeasible(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Verify(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Degenerate(_) => 3,
            CliError::Infeasible(_) => 4,
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Verify(m) => write!(f, "verification failed: {m}"),
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Degenerate(m) => write!(f, "degenerate instance: {m}"),
            CliError::Infeasible(m) => write!(f, "infeasible: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::DegenerateInstance(i) => CliError::Degenerate(format!("I(X;Y) = {i:e} nats")),
            CoreError::Infeasible(why) => CliError::Infeasible(why.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(format!("i/o: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Usage(format!("json: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Usage(format!("csv: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
