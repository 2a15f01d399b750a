//! CLI error taxonomy mapped onto process exit codes.

use spdc_herald::Error as CoreError;

/// Exit code 2: bad configuration or input data.
/// Exit code 3: a numerical routine failed to produce a result.
/// Exit code 4: filesystem or encoding trouble.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Numerical(_) => "numerical",
            CliError::Io(_) => "io",
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Domain { .. }
            | CoreError::InvalidInput(_)
            | CoreError::UnderDetermined(_)
            | CoreError::SeriesTooShort { .. } => CliError::Config(e.to_string()),
            CoreError::NearDegenerate { .. }
            | CoreError::Truncation { .. }
            | CoreError::UndefinedFidelity { .. }
            | CoreError::Unachievable { .. }
            | CoreError::NoConvergence { .. }
            | CoreError::MixtureFit(_) => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
