//! Runner library behind the `steindyn` binary: configuration, the
//! pipeline stages, CSV emission, and rate fitting.

pub mod config;
pub mod csvio;
pub mod pipeline;
pub mod rates;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numerical(String),
    AcceptanceFailed(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "validation error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::AcceptanceFailed(m) => write!(f, "acceptance check failed: {m}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::AcceptanceFailed(_) => 3,
        }
    }
}
