use std::fmt;
use std::io;

/// Failure classes of a command, each with its own exit status.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Computation(ltr_core::Error),
    MissingDependency(String),
    Io(io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Computation(_) | CliError::Io(_) => 3,
            CliError::MissingDependency(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Computation(e) => write!(f, "computation failed: {e}"),
            CliError::MissingDependency(m) => write!(f, "missing dependency: {m}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ltr_core::Error> for CliError {
    fn from(e: ltr_core::Error) -> Self {
        CliError::Computation(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}
