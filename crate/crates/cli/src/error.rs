use std::fmt;
use std::path::PathBuf;

use fpm_core::error::FpmError;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;
pub const EXIT_OTHER: i32 = 1;

#[derive(Debug)]
pub enum CliError {
    /// A config field (or override flag) failed validation.
    Config { field: String, reason: String },
    Core(FpmError),
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => EXIT_CONFIG,
            CliError::Io { .. } => EXIT_OTHER,
            CliError::Core(e) => match e {
                FpmError::InvalidParameter { .. } => EXIT_CONFIG,
                FpmError::NonFinite(_) => EXIT_NUMERIC,
                FpmError::Io { .. } => EXIT_OTHER,
                FpmError::DimensionMismatch { .. }
                | FpmError::LedOutOfBounds { .. }
                | FpmError::ShiftOutOfBounds { .. }
                | FpmError::MissingFrame { .. }
                | FpmError::Inconsistent(_)
                | FpmError::UnsupportedFormat { .. }
                | FpmError::CorruptImage { .. }
                | FpmError::Manifest { .. } => EXIT_DATA,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config { field, reason } => write!(f, "config field `{field}`: {reason}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
        }
    }
}

impl std::error::Error for CliError {}

impl From<FpmError> for CliError {
    fn from(e: FpmError) -> Self {
        CliError::Core(e)
    }
}

/// Re-labels a core parameter error as a config error under `prefix`.
pub fn in_section(prefix: &str) -> impl Fn(FpmError) -> CliError + '_ {
    move |e| match e {
        FpmError::InvalidParameter { name, reason } => CliError::config(format!("{prefix}.{name}"), reason),
        other => CliError::config(prefix, other.to_string()),
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
