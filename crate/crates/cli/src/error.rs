use std::fmt;

/// A failed command, classified by the exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or values, missing input files, output locations that do
    /// not exist. Exit code 1.
    Usage(String),
    /// Inputs that exist but cannot be parsed, validated or fitted. Exit code 2.
    Data(anyhow::Error),
    /// Everything else. Exit code 3.
    Internal(anyhow::Error),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    pub fn data(msg: impl fmt::Display) -> Self {
        CliError::Data(anyhow::anyhow!("{msg}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Data(e) => write!(f, "data error: {e:#}"),
            CliError::Internal(e) => write!(f, "internal error: {e:#}"),
        }
    }
}

pub trait ResultExt<T> {
    /// Classifies the error as bad input data, with `what` as context.
    fn data(self, what: impl fmt::Display) -> CliResult<T>;
    fn internal(self, what: impl fmt::Display) -> CliResult<T>;
}

impl<T, E> ResultExt<T> for Result<T, E>
where
    E: std::error::Error + Send + Sync + 'static,
{
    fn data(self, what: impl fmt::Display) -> CliResult<T> {
        self.map_err(|e| CliError::Data(anyhow::Error::new(e).context(what.to_string())))
    }

    fn internal(self, what: impl fmt::Display) -> CliResult<T> {
        self.map_err(|e| CliError::Internal(anyhow::Error::new(e).context(what.to_string())))
    }
}
