use robsub_core::Error;

/// Command failure, grouped by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Unreadable or malformed input (exit 2).
    #[error("input error: {0}")]
    Io(String),
    /// Invalid flags or parameters (exit 3).
    #[error("configuration error: {0}")]
    Config(String),
    /// The computation itself failed (exit 4).
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 2,
            CliError::Config(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(_)
            | Error::Shape(_)
            | Error::InvalidParameter(_)
            | Error::CapExceeded(_)
            | Error::NonRegularGraph => CliError::Config(e.to_string()),
            Error::ZeroScores | Error::RecursionDepth { .. } | Error::Numerical(_) => CliError::Numerical(e.to_string()),
        }
    }
}
