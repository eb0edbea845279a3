use std::fmt;

/// Process exit status for a failed command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    /// Malformed or inconsistent input.
    Validation = 2,
    /// A required file or resource is absent or unreadable.
    Missing = 3,
    /// The model could not decode an input line.
    Decode = 4,
}

#[derive(Debug)]
pub struct CliError {
    pub exit: Exit,
    pub error: anyhow::Error,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub trait Classify<T> {
    fn or_exit(self, exit: Exit) -> CliResult<T>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn or_exit(self, exit: Exit) -> CliResult<T> {
        self.map_err(|e| CliError {
            exit,
            error: e.into(),
        })
    }
}

pub fn fail<T>(exit: Exit, message: impl fmt::Display) -> CliResult<T> {
    Err(CliError {
        exit,
        error: anyhow::anyhow!("{message}"),
    })
}
