//! Experiment runner: single runs, grid sweeps, theory checks and benchmark
//! tables, all written as reproducible output bundles.

pub mod config;
pub mod report;
pub mod run;
pub mod sweep;
pub mod theory;

use qtdm::QtdmError;
use thiserror::Error;

pub use config::{ConfigArgs, ExperimentConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("contract failure: {0}")]
    Contract(String),

    #[error("{0} sweep rows failed")]
    PartialSweep(usize),

    #[error(transparent)]
    Core(#[from] QtdmError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Core(QtdmError::InvalidArgument(_)) => 2,
            CliError::Contract(_) => 3,
            CliError::PartialSweep(_) => 4,
            _ => 1,
        }
    }
}

/// Sizes the global worker pool from `QTDM_THREADS` (unset or invalid means
/// the rayon default).
pub fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("QTDM_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| CliError::Config(format!("QTDM_THREADS = '{raw}' is not a count")))?;
    if n == 0 {
        return Err(CliError::Config("QTDM_THREADS must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("worker pool: {e}")))
}
