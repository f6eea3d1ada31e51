use std::fmt::Display;

/// Command failure, mapped onto the process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("missing input: {0}")]
    Missing(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("{0}")]
    Run(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Run(_) => 1,
            CliError::Config(_) => 2,
            CliError::Missing(_) => 3,
            CliError::Input(_) => 4,
        }
    }

    pub fn run(e: impl Display) -> Self {
        CliError::Run(e.to_string())
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        if e.kind() == std::io::ErrorKind::NotFound {
            CliError::Missing(path.display().to_string())
        } else {
            CliError::Run(format!("{}: {e}", path.display()))
        }
    }
}
