//! Experiment runner for the `laminar` binary.

pub mod acceptance;
pub mod commands;
pub mod config;

use std::path::PathBuf;

pub use commands::{run, Command, Outcome};
pub use config::ExperimentConfig;

/// Environment variable holding the worker count for parallel sweeps.
pub const WORKERS_ENV: &str = "LAMINAR_WORKERS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Core(#[from] laminar::Error),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    /// Process exit status: 2 for configuration problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Core(e) if is_input_error(e) => 2,
            Self::Core(_) | Self::Io { .. } => 1,
        }
    }
}

/// Core errors caused by the supplied parameters rather than by a run.
fn is_input_error(e: &laminar::Error) -> bool {
    use laminar::Error::*;
    matches!(
        e,
        EmptyMedium
            | LayerCountMismatch { .. }
            | NonPositiveCoefficient { .. }
            | NonFiniteInterface { .. }
            | NonIncreasingInterfaces { .. }
            | OutOfRange { .. }
            | DegreeCapTooLarge { .. }
            | SourceStraddlesInterface { .. }
            | Precondition(_)
            | MediumParse(_)
    )
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Reads the worker count from the environment; `None` leaves the default.
pub fn worker_count() -> CliResult<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Config(format!("{WORKERS_ENV} must be a positive integer, got {v:?}"))),
        },
    }
}

/// Installs the global worker pool once.
pub fn configure_workers() -> CliResult<()> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = worker_count()? {
        builder = builder.num_threads(n);
    }
    // A second call in the same process keeps the first pool.
    let _ = builder.build_global();
    Ok(())
}
