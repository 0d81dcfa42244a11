use std::fmt;
use std::io;
use std::path::{Path, PathBuf};

/// Errors of the command-line front end.
#[derive(Debug)]
pub enum CliError {
    /// Malformed or inconsistent configuration, with the offending line
    /// when one is known.
    Config { line: Option<usize>, msg: String },
    /// A numerical routine failed on a well-formed problem.
    Numeric(ctlseq_core::Error),
    Io { path: PathBuf, source: io::Error },
    Format(String),
}

impl CliError {
    pub fn config(line: usize, msg: impl Into<String>) -> Self {
        Self::Config {
            line: Some(line),
            msg: msg.into(),
        }
    }

    pub fn io(path: &Path, source: io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Process exit code: 2 for configuration errors, 3 for numerical
    /// failures and 1 for IO.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config { .. } => 2,
            Self::Numeric(_) => 3,
            Self::Io { .. } | Self::Format(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config { line: Some(line), msg } => write!(f, "config line {line}: {msg}"),
            Self::Config { line: None, msg } => write!(f, "config: {msg}"),
            Self::Numeric(e) => write!(f, "numerical failure: {e}"),
            Self::Io { path, source } => write!(f, "{}: {source}", path.display()),
            Self::Format(msg) => write!(f, "output: {msg}"),
        }
    }
}

impl std::error::Error for CliError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Self::Numeric(e) => Some(e),
            Self::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}

impl From<ctlseq_core::Error> for CliError {
    fn from(e: ctlseq_core::Error) -> Self {
        use ctlseq_core::Error as E;
        match e {
            E::Convergence { .. } | E::NotApplicable(_) => Self::Numeric(e),
            other => Self::Config {
                line: None,
                msg: other.to_string(),
            },
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Format(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::Format(e.to_string())
    }
}
