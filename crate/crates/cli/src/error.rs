use thiserror::Error;
use waveguide_core::WaveguideError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("config: {0}")]
    Missing(String),

    #[error("acceptance failure: {0}")]
    Acceptance(String),

    #[error("{context}: {source}")]
    Numerical {
        context: String,
        #[source]
        source: WaveguideError,
    },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn config(line: usize, message: impl Into<String>) -> Self {
        CliError::Config { line, message: message.into() }
    }

    /// 2 acceptance failure, 3 configuration error, 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Acceptance(_) => 2,
            CliError::Config { .. } | CliError::Missing(_) => 3,
            CliError::Numerical { source: WaveguideError::SweepRejected(_), .. } => 2,
            CliError::Numerical { .. } => 4,
            CliError::Io(_) => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Attaches a module context to core errors.
pub trait Context<T> {
    fn context(self, what: &str) -> CliResult<T>;
}

impl<T> Context<T> for waveguide_core::Result<T> {
    fn context(self, what: &str) -> CliResult<T> {
        self.map_err(|source| CliError::Numerical { context: what.to_string(), source })
    }
}
