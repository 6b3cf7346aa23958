use thiserror::Error;

#[derive(Debug, Error)]
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
            CliError::Io(_) => 1,
        }
    }

    /// Wraps a library error with the point at which it occurred.
    pub fn numerical(at: &str, e: tvdiag::Error) -> Self {
        match e {
            tvdiag::Error::InvalidParameter(m) => CliError::Config(format!("{at}: {m}")),
            e => CliError::Numerical(format!("{at}: {e}")),
        }
    }
}
