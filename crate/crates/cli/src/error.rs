use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed config document.
    #[error("config line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Well-formed document with an invalid or missing setting.
    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] ecomarl_core::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    /// One or more grid runs failed.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn parse(line: usize, message: impl Into<String>) -> Self {
        CliError::Parse {
            line,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        CliError::Config(message.into())
    }

    /// 1 for configuration problems, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Config(_) => 1,
            CliError::Core(ecomarl_core::Error::Config { .. }) => 1,
            _ => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
