//! Experiment driver behind the `srlwctl` binary: JSON configuration,
//! dispatch to the solvers of `srlw-core`, and machine-readable reports.

mod config;
mod experiments;
pub use experiments::profiles;
mod report;

pub use config::{Experiment, ExperimentConfig};
pub use report::{emit_plot_data, ExperimentReport, PlotFile};

use srlw_core::SrlwError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{experiment}: {source}")]
    Numerical {
        experiment: Experiment,
        #[source]
        source: SrlwError,
    },

    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

impl CliError {
    /// Process exit status: 2 for configuration problems, 3 for numerical
    /// failures, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical { source: SrlwError::InvalidArgument(_), .. } => 2,
            CliError::Numerical { source: SrlwError::Io { .. }, .. } => 1,
            CliError::Numerical { .. } => 3,
            CliError::Io { .. } => 1,
        }
    }

    /// Short machine-readable kind for structured error output.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "ConfigError",
            CliError::Io { .. } => "IoError",
            CliError::Numerical { source, .. } => match source {
                SrlwError::InvalidArgument(_) => "ConfigError",
                SrlwError::DegenerateFamily(..) => "DegenerateFamily",
                SrlwError::IllConditioned { .. } => "IllConditioned",
                SrlwError::ZeroMeanBump => "ZeroMeanBump",
                SrlwError::MeanMismatch { .. } => "MeanMismatch",
                SrlwError::NonConvergence { .. } => "NonConvergence",
                SrlwError::Overflow(_) => "Overflow",
                SrlwError::Io { .. } => "IoError",
            },
        }
    }
}

/// Runs one experiment. Deterministic: the same configuration always gives
/// bitwise-identical metrics.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport, CliError> {
    let start = std::time::Instant::now();
    let mut report = experiments::dispatch(config)?;
    report.wall_time = start.elapsed().as_secs_f64();
    Ok(report)
}
