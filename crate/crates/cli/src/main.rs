use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serde_json::json;
use srlw_cli::{emit_plot_data, run, CliError, Experiment, ExperimentConfig};

/// Run a reproducible control experiment and print its report as JSON.
#[derive(Debug, Parser)]
#[command(name = "srlwctl", version)]
struct Args {
    /// One of: simulate, moving-control, point-control, nonlinear-control,
    /// bounded-spectrum, spectral-probe, approx-control, gap-report.
    experiment: String,

    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Directory for CSV plot data and report.json.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Parameter override, `key=value`; may be repeated.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
}

fn execute(args: &Args) -> Result<String, CliError> {
    let experiment: Experiment = args.experiment.parse()?;
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            ExperimentConfig::from_json(&text, Some(experiment))?
        }
        None => ExperimentConfig::new(experiment),
    };
    for assignment in &args.params {
        config.apply_override(assignment)?;
    }
    if let Some(out) = &args.out {
        config.output_dir = Some(out.clone());
    }
    let mut report = run(&config)?;
    if let Some(dir) = config.output_dir.clone() {
        emit_plot_data(&mut report, &dir)?;
    }
    Ok(report.to_json_pretty())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(text) => {
            println!("{text}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            let body = json!({ "error": err.kind(), "message": err.to_string() });
            eprintln!("{body}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
