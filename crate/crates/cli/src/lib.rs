//! Experiment runner for the continuous-variable annealing simulator:
//! parameter-vs-T sweeps, model overlays, Kerr-catalyst comparisons, the
//! binary-encoded QUBO baseline, and classical-fit / spectrum oracles, all
//! emitted as machine-readable CSV.

pub mod commands;
pub mod config;
pub mod output;

/// CLI-level error with the documented exit-code mapping: 1 for config,
/// schema, and data errors; 2 for a numerical-instability abort.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(cvanneal_core::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "{msg}"),
            CliError::Core(err) => write!(f, "{err}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<cvanneal_core::Error> for CliError {
    fn from(err: cvanneal_core::Error) -> Self {
        CliError::Core(err)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(cvanneal_core::Error::IntegrationUnstable { .. }) => 2,
            _ => 1,
        }
    }
}
