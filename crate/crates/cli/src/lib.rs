//! Library side of the `noisybs` command-line tool: point evaluation,
//! sweeps, CSV/JSON emission and the built-in self-test.

pub mod format;
pub mod matrix;
pub mod point;
pub mod presets;
pub mod selftest;
pub mod sweep;

use std::fmt;

/// Failure of a CLI command, split by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, parameters or input files. Exit code 1.
    Usage(String),
    /// Numerical or resource failure during evaluation. Exit code 2.
    Numeric(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        Self::Usage(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Self::Numeric(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 1,
            Self::Numeric(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(m) => write!(f, "usage error: {m}"),
            Self::Numeric(m) => write!(f, "error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<noisybs::error::Error> for CliError {
    fn from(e: noisybs::error::Error) -> Self {
        use noisybs::error::Error as E;
        match e {
            E::InvalidParameter { .. }
            | E::IndexOutOfRange { .. }
            | E::DimensionMismatch { .. }
            | E::NotSquare(..)
            | E::NonFinite(..)
            | E::NotUnitary(_)
            | E::SingularValueAboveOne(_)
            | E::Json(_) => Self::Usage(e.to_string()),
            _ => Self::Numeric(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Numeric(format!("i/o: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Numeric(format!("csv: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
