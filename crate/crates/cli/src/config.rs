use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

/// The experiments `srlwctl` can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Simulate,
    MovingControl,
    PointControl,
    NonlinearControl,
    BoundedSpectrum,
    SpectralProbe,
    ApproxControl,
    GapReport,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::Simulate,
        Experiment::MovingControl,
        Experiment::PointControl,
        Experiment::NonlinearControl,
        Experiment::BoundedSpectrum,
        Experiment::SpectralProbe,
        Experiment::ApproxControl,
        Experiment::GapReport,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::MovingControl => "moving-control",
            Experiment::PointControl => "point-control",
            Experiment::NonlinearControl => "nonlinear-control",
            Experiment::BoundedSpectrum => "bounded-spectrum",
            Experiment::SpectralProbe => "spectral-probe",
            Experiment::ApproxControl => "approx-control",
            Experiment::GapReport => "gap-report",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Experiment {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| CliError::Config(format!("unknown experiment '{s}'")))
    }
}

/// Parsed experiment configuration.
///
/// JSON objects may give parameters either at top level
/// (`{"experiment": "gap-report", "c": 3}`) or under a `parameters` key.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub parameters: BTreeMap<String, Value>,
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self { experiment, parameters: BTreeMap::new(), output_dir: None }
    }

    /// Parses a JSON document. `experiment` may be omitted when `expected`
    /// supplies it; if both are present they must agree.
    pub fn from_json(text: &str, expected: Option<Experiment>) -> Result<Self, CliError> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("config is not valid JSON: {e}")))?;
        let Value::Object(map) = value else {
            return Err(CliError::Config("config must be a JSON object".into()));
        };
        let mut parameters = BTreeMap::new();
        let mut experiment = None;
        let mut output_dir = None;
        for (key, v) in map {
            match key.as_str() {
                "experiment" => {
                    let name = v.as_str().ok_or_else(|| CliError::Config("'experiment' must be a string".into()))?;
                    experiment = Some(name.parse::<Experiment>()?);
                }
                "output_dir" => {
                    let dir = v.as_str().ok_or_else(|| CliError::Config("'output_dir' must be a string".into()))?;
                    output_dir = Some(PathBuf::from(dir));
                }
                "parameters" => {
                    let Value::Object(inner) = v else {
                        return Err(CliError::Config("'parameters' must be an object".into()));
                    };
                    parameters.extend(inner);
                }
                _ => {
                    parameters.insert(key, v);
                }
            }
        }
        let experiment = match (experiment, expected) {
            (Some(a), Some(b)) if a != b => {
                return Err(CliError::Config(format!("config is for '{a}' but '{b}' was requested")))
            }
            (Some(a), _) | (None, Some(a)) => a,
            (None, None) => return Err(CliError::Config("missing 'experiment'".into())),
        };
        Ok(Self { experiment, parameters, output_dir })
    }

    /// Applies a `key=value` override; the value is read as JSON when it
    /// parses, otherwise as a string.
    pub fn apply_override(&mut self, assignment: &str) -> Result<(), CliError> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("override '{assignment}' is not of the form key=value")))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(CliError::Config(format!("override '{assignment}' has an empty key")));
        }
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        if key == "output_dir" {
            let dir = value.as_str().map(str::to_string).unwrap_or_else(|| raw.to_string());
            self.output_dir = Some(PathBuf::from(dir));
        } else {
            self.parameters.insert(key.to_string(), value);
        }
        Ok(())
    }

    pub(crate) fn reader(&self) -> Params<'_> {
        Params { map: &self.parameters, used: RefCell::new(BTreeSet::new()) }
    }
}

/// Typed access to the parameter map that remembers which keys were read,
/// so that misspelled keys are reported instead of silently ignored.
pub(crate) struct Params<'a> {
    map: &'a BTreeMap<String, Value>,
    used: RefCell<BTreeSet<String>>,
}

impl Params<'_> {
    fn raw(&self, key: &str) -> Option<&Value> {
        self.used.borrow_mut().insert(key.to_string());
        self.map.get(key)
    }

    pub fn f64(&self, key: &str, default: f64) -> Result<f64, CliError> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .as_f64()
                .filter(|x| x.is_finite())
                .ok_or_else(|| CliError::Config(format!("'{key}' must be a finite number, got {v}"))),
        }
    }

    pub fn positive(&self, key: &str, default: f64) -> Result<f64, CliError> {
        let v = self.f64(key, default)?;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(CliError::Config(format!("'{key}' must be positive, got {v}")))
        }
    }

    pub fn non_negative(&self, key: &str, default: f64) -> Result<f64, CliError> {
        let v = self.f64(key, default)?;
        if v >= 0.0 {
            Ok(v)
        } else {
            Err(CliError::Config(format!("'{key}' must be non-negative, got {v}")))
        }
    }

    pub fn usize(&self, key: &str, default: usize) -> Result<usize, CliError> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .as_u64()
                .map(|x| x as usize)
                .ok_or_else(|| CliError::Config(format!("'{key}' must be a non-negative integer, got {v}"))),
        }
    }

    pub fn usize_at_least(&self, key: &str, default: usize, min: usize) -> Result<usize, CliError> {
        let v = self.usize(key, default)?;
        if v >= min {
            Ok(v)
        } else {
            Err(CliError::Config(format!("'{key}' must be at least {min}, got {v}")))
        }
    }

    pub fn string(&self, key: &str, default: &str) -> Result<String, CliError> {
        match self.raw(key) {
            None => Ok(default.to_string()),
            Some(Value::String(s)) => Ok(s.clone()),
            Some(v) => Err(CliError::Config(format!("'{key}' must be a string, got {v}"))),
        }
    }

    pub fn f64_list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, CliError> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| v.as_f64().filter(|x| x.is_finite()))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| CliError::Config(format!("'{key}' must be an array of finite numbers"))),
            Some(v) => Err(CliError::Config(format!("'{key}' must be an array, got {v}"))),
        }
    }

    /// Fails on any key that no accessor asked for.
    pub fn finish(self) -> Result<(), CliError> {
        let used = self.used.into_inner();
        let unknown: Vec<&str> = self.map.keys().filter(|k| !used.contains(*k)).map(String::as_str).collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(format!("unknown parameter(s): {}", unknown.join(", "))))
        }
    }
}
