pub mod estimate_path;
pub mod fit_copula;
pub mod fit_marginals;
pub mod gof_cmd;
pub mod sweep;
pub mod synth;

mod common;

use thiserror::Error;

/// Command-level failures, bucketed by exit code: usage and I/O problems
/// exit 2, model/fit failures exit 1.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Fit(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Fit(_) => 1,
        }
    }
}

impl From<pathttd_core::Error> for CliError {
    fn from(e: pathttd_core::Error) -> Self {
        match e {
            pathttd_core::Error::Io(inner) => CliError::Io(inner.to_string()),
            pathttd_core::Error::DegenerateInput(_) => CliError::Fit(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}
