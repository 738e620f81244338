use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Validation(String),

    #[error(transparent)]
    Core(#[from] infonomics_core::Error),
}

impl CliError {
    /// 2 usage, 3 validation, 4 numerical failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Core(infonomics_core::Error::Numerical(_)) => 4,
            CliError::Core(_) => 3,
        }
    }
}
