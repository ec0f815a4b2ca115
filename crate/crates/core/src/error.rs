use thiserror::Error;

/// Errors raised by the library. Each variant maps onto a CLI exit code.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid arguments, malformed input files, or refused preconditions.
    #[error("usage error: {0}")]
    Usage(String),

    /// A point outside the domain where an operation is defined (e.g. a kink of the cost).
    #[error("domain error: {0}")]
    Domain(String),

    /// A solver or certificate check failed numerically.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Configuration file problem, with the 1-based line number.
    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    /// An I/O failure on `path`, keeping the error kind.
    pub(crate) fn io_at(path: &std::path::Path, e: std::io::Error) -> Self {
        Error::Io(std::io::Error::new(e.kind(), format!("cannot read `{}`: {e}", path.display())))
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Domain(_) | Error::Config { .. } => 1,
            Error::Numerical(_) | Error::Io(_) => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
