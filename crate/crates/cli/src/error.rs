use std::fmt;

use scod::ScodError;

/// Failure categories, each with its own process exit code.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
    Numeric(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ScodError> for CliError {
    fn from(e: ScodError) -> Self {
        let msg = e.to_string();
        match e {
            ScodError::InvalidConfiguration(_)
            | ScodError::InvalidCost(_)
            | ScodError::Parse(_) => CliError::Config(msg),
            ScodError::TrainingDiverged { .. } | ScodError::RankDeficient { .. } => {
                CliError::Numeric(msg)
            }
            ScodError::InvalidInput(_)
            | ScodError::EmptyInput(_)
            | ScodError::LabelOutOfRange { .. }
            | ScodError::DimensionMismatch { .. } => CliError::Data(msg),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn io_error(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}
