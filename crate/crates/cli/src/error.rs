use std::fmt;
use std::io;
use std::process::ExitCode;

#[derive(Debug)]
pub enum CliError {
    /// Invalid flag values or combinations.
    Usage(String),
    Io {
        target: String,
        source: io::Error,
    },
    /// One or more verification checks failed.
    CheckFailed(usize),
}

impl CliError {
    pub fn io(target: impl fmt::Display, source: io::Error) -> Self {
        CliError::Io {
            target: target.to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::CheckFailed(_) => ExitCode::from(1),
            CliError::Usage(_) => ExitCode::from(2),
            CliError::Io { .. } => ExitCode::from(3),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "error: {msg}"),
            CliError::Io { target, source } => write!(f, "error: cannot write {target}: {source}"),
            CliError::CheckFailed(n) => write!(f, "verification failed: {n} check(s) did not pass"),
        }
    }
}

impl From<ouhaar::Error> for CliError {
    fn from(e: ouhaar::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}
