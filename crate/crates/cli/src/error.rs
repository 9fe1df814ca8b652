use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("invariant violation: {0}")]
    Invariant(String),

    #[error("search budget exhausted: {0}")]
    Budget(String),

    #[error(transparent)]
    Core(#[from] netsense::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Invariant(_) | CliError::Core(_) | CliError::Io(_) => 3,
            CliError::Budget(_) => 4,
        }
    }
}
