use std::process::ExitCode;

/// Failures surfaced by the command-line front end, each with its own exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    /// A run-trace invariant failed; the message names it.
    #[error("audit failed: {0}")]
    Audit(String),
    #[error("solver nonconvergence: {0}")]
    Nonconvergence(String),
    #[error(transparent)]
    Other(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Other(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Audit(_) => 3,
            CliError::Nonconvergence(_) => 4,
        }
    }

    /// True when stdout was closed early, e.g. piped into `head`.
    pub fn is_broken_pipe(&self) -> bool {
        let CliError::Other(e) = self else { return false };
        e.chain().any(|c| {
            c.downcast_ref::<std::io::Error>().is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
                || c.downcast_ref::<csv::Error>().is_some_and(
                    |e| matches!(e.kind(), csv::ErrorKind::Io(io) if io.kind() == std::io::ErrorKind::BrokenPipe),
                )
        })
    }
}

impl From<nash_stream_core::Error> for CliError {
    fn from(e: nash_stream_core::Error) -> Self {
        match e {
            nash_stream_core::Error::Precondition(msg) => CliError::Usage(msg),
            other => CliError::Other(other.into()),
        }
    }
}

impl From<CliError> for ExitCode {
    fn from(e: CliError) -> Self {
        ExitCode::from(e.exit_code())
    }
}

pub type CliResult<T> = Result<T, CliError>;
