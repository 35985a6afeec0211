use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::{CliError, ExperimentConfig};

/// A plot-ready file held in memory until [`emit_plot_data`] writes it.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotFile {
    pub name: String,
    pub contents: Vec<u8>,
}

/// Outcome of [`crate::run`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub metrics: BTreeMap<String, Value>,
    pub artifacts: Vec<String>,
    /// Seconds; the only field that varies between identical runs.
    pub wall_time: f64,
    #[serde(skip)]
    pub plot_data: Vec<PlotFile>,
}

impl ExperimentReport {
    pub(crate) fn new(config: &ExperimentConfig) -> Self {
        Self { config: config.clone(), metrics: BTreeMap::new(), artifacts: Vec::new(), wall_time: 0.0, plot_data: Vec::new() }
    }

    pub(crate) fn metric(&mut self, name: &str, value: impl Into<Value>) {
        self.metrics.insert(name.to_string(), value.into());
    }

    pub(crate) fn plot(&mut self, name: &str, contents: Vec<u8>) {
        self.plot_data.push(PlotFile { name: name.to_string(), contents });
    }

    /// Metrics serialized as JSON text, the object of the determinism check.
    pub fn metrics_json(&self) -> String {
        serde_json::to_string(&self.metrics).expect("metrics are plain JSON values")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is plain JSON")
    }
}

/// Writes every plot file and `report.json` into `dir`, recording the
/// written paths in `report.artifacts`.
pub fn emit_plot_data(report: &mut ExperimentReport, dir: &Path) -> Result<(), CliError> {
    let io = |path: &Path, e: std::io::Error| CliError::Io { path: path.display().to_string(), message: e.to_string() };
    fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    report.artifacts.clear();
    for file in &report.plot_data {
        let path = dir.join(&file.name);
        fs::write(&path, &file.contents).map_err(|e| io(&path, e))?;
        report.artifacts.push(path.display().to_string());
    }
    let path = dir.join("report.json");
    report.artifacts.push(path.display().to_string());
    fs::write(&path, report.to_json_pretty()).map_err(|e| io(&path, e))?;
    Ok(())
}
