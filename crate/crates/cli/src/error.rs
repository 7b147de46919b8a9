use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Library(#[from] wasserflow::Error),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    /// 1 for configuration and runtime errors, 2 when the Euler scheme leaves
    /// its stability bound.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Library(wasserflow::Error::StabilityViolation { .. }) => 2,
            _ => 1,
        }
    }
}
