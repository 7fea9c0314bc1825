use thiserror::Error;

/// Failure of a CLI command, classified by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable or malformed input, or bad flags. Exit code 2.
    #[error("{0}")]
    Input(String),
    /// Degenerate data such as a singular scatter matrix. Exit code 3.
    #[error("{0}")]
    Numerical(String),
    /// The simulator could not produce a stable model. Exit code 4.
    #[error("{0}")]
    Simulation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Simulation(_) => 4,
        }
    }
}

impl From<plvar::Error> for CliError {
    fn from(e: plvar::Error) -> Self {
        match e {
            plvar::Error::SimulationFailure(_) => CliError::Simulation(e.to_string()),
            _ if e.is_numerical() => CliError::Numerical(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
