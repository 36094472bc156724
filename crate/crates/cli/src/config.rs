//! Run configuration: file loading, flag overrides and validation.
//!
//! A config file (TOML, or JSON when the extension is `.json`) is read into a
//! generic JSON value, command-line flags are written over it, and the result
//! is deserialized into [`RunConfig`]. Unknown fields are rejected at every
//! level.

use std::path::{Path, PathBuf};

use p2pbw::{AggregateSpec, BandwidthSpec, MultiserviceSpec, NamedService};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generate: Option<GenerateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimate: Option<EstimateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analyze: Option<AnalyzeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub queue: Option<QueueConfig>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Signal {
    #[default]
    Bandwidth,
    OuPath,
    Traffic,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateConfig {
    pub output: PathBuf,
    #[serde(default)]
    pub signal: Signal,
    /// Single model; with `replicas` it becomes an aggregate of identical copies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<BandwidthSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicas: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<Vec<BandwidthSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub services: Option<Vec<NamedService>>,
    /// Also write each aggregate component to its own file.
    #[serde(default)]
    pub write_components: bool,
}

pub enum GeneratePlan {
    Single(BandwidthSpec),
    Aggregate(AggregateSpec),
    Multiservice(MultiserviceSpec),
}

impl GenerateConfig {
    pub fn plan(&self) -> CliResult<GeneratePlan> {
        let chosen = [self.model.is_some(), self.components.is_some(), self.services.is_some()]
            .iter()
            .filter(|b| **b)
            .count();
        if chosen != 1 {
            return Err(CliError::usage(
                "generate: set exactly one of `model`, `components` or `services`",
            ));
        }
        if self.signal != Signal::Bandwidth && (self.model.is_none() || self.replicas.is_some()) {
            return Err(CliError::usage(
                "generate: `ou_path` and `traffic` signals need a single `model` without `replicas`",
            ));
        }
        if self.replicas.is_some() && self.model.is_none() {
            return Err(CliError::usage("generate: `replicas` applies to `model` only"));
        }
        if self.write_components && self.model.is_some() && self.replicas.is_none() {
            return Err(CliError::usage("generate: `write_components` needs an aggregate"));
        }
        if let Some(model) = self.model {
            model.validate().map_err(|e| CliError::config("generate.model", e))?;
            return match self.replicas {
                None => Ok(GeneratePlan::Single(model)),
                Some(0) => Err(CliError::usage("generate: `replicas` must be >= 1")),
                Some(n) => AggregateSpec::new(vec![model; n])
                    .map(GeneratePlan::Aggregate)
                    .map_err(|e| CliError::config("generate", e)),
            };
        }
        if let Some(components) = &self.components {
            return AggregateSpec::new(components.clone())
                .map(GeneratePlan::Aggregate)
                .map_err(|e| CliError::config("generate.components", e));
        }
        let services = self.services.clone().unwrap_or_default();
        for s in &services {
            if s.name.is_empty()
                || !s.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
            {
                return Err(CliError::usage(format!(
                    "generate.services: name {:?} must use only letters, digits, '_' or '-'",
                    s.name
                )));
            }
        }
        MultiserviceSpec::new(services)
            .map(GeneratePlan::Multiservice)
            .map_err(|e| CliError::config("generate.services", e))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    pub output: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ou_trace: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub traffic_samples: Option<PathBuf>,
    /// Lower cutoff `a` of the traffic samples.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<f64>,
}

impl EstimateConfig {
    pub fn validate(&self) -> CliResult<()> {
        if self.ou_trace.is_none() && self.traffic_samples.is_none() {
            return Err(CliError::usage(
                "estimate: give `ou_trace`, `traffic_samples` or both",
            ));
        }
        match (self.traffic_samples.is_some(), self.cutoff) {
            (true, None) => Err(CliError::usage("estimate: `traffic_samples` needs `cutoff`")),
            (_, Some(a)) if !(a.is_finite() && a > 0.0) => {
                Err(CliError::usage(format!("estimate: cutoff must be > 0, got {a}")))
            }
            _ => Ok(()),
        }
    }
}

fn default_max_lag() -> usize {
    200
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeConfig {
    pub input: PathBuf,
    pub output: PathBuf,
    #[serde(default = "default_max_lag")]
    pub max_lag: usize,
    /// Model constants for the closed-form moment and Hurst values.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<BandwidthSpec>,
}

fn default_burn_in_fraction() -> f64 {
    p2pbw::queueing::DEFAULT_BURN_IN_FRACTION
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueueConfig {
    pub output: PathBuf,
    pub download_rate: f64,
    pub upload_rate: f64,
    /// Arrival trace; when absent the arrivals are synthesized from `model`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arrivals: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<BandwidthSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub service_rate: Option<f64>,
    /// Mean arrival rate over service rate; sets the service rate from the data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utilization: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hurst: Option<f64>,
    /// Variance coefficient `a` of the tail formula.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variance_coefficient: Option<f64>,
    #[serde(default = "default_burn_in_fraction")]
    pub burn_in_fraction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<Vec<f64>>,
}

impl QueueConfig {
    pub fn validate(&self) -> CliResult<()> {
        if self.arrivals.is_none() && self.model.is_none() {
            return Err(CliError::usage("queue: give `arrivals` or a `model` to synthesize them"));
        }
        match (self.service_rate, self.utilization) {
            (Some(c), None) if c.is_finite() && c > 0.0 => {}
            (None, Some(u)) if u.is_finite() && u > 0.0 => {}
            (Some(_), Some(_)) | (None, None) => {
                return Err(CliError::usage(
                    "queue: set exactly one of `service_rate` and `utilization`",
                ))
            }
            _ => return Err(CliError::usage("queue: service rate and utilization must be > 0")),
        }
        if let Some(m) = &self.model {
            m.validate().map_err(|e| CliError::config("queue.model", e))?;
        }
        if self.hurst.is_none() && self.model.is_none() {
            return Err(CliError::usage("queue: set `hurst` or give a `model` to derive it"));
        }
        Ok(())
    }
}

/// Reads a config file into a JSON value; no file gives an empty object.
pub fn load(path: Option<&Path>) -> CliResult<Value> {
    let Some(path) = path else {
        return Ok(Value::Object(Map::new()));
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("reading config {}: {e}", path.display())))?;
    let value: Value = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text)
            .map_err(|e| CliError::usage(format!("parsing config {}: {e}", path.display())))?
    } else {
        toml::from_str(&text)
            .map_err(|e| CliError::usage(format!("parsing config {}: {e}", path.display())))?
    };
    if !value.is_object() {
        return Err(CliError::usage("config root must be a table"));
    }
    Ok(value)
}

/// Writes `value` at `path`, creating intermediate tables.
pub fn set(root: &mut Value, path: &[&str], value: Value) {
    let mut node = root;
    for key in &path[..path.len() - 1] {
        let map = node.as_object_mut().expect("config nodes are tables");
        node = map
            .entry(key.to_string())
            .or_insert_with(|| Value::Object(Map::new()));
        if !node.is_object() {
            *node = Value::Object(Map::new());
        }
    }
    node.as_object_mut()
        .expect("config nodes are tables")
        .insert(path[path.len() - 1].to_string(), value);
}

pub fn resolve(value: Value) -> CliResult<RunConfig> {
    let cfg: RunConfig =
        serde_json::from_value(value).map_err(|e| CliError::usage(format!("config: {e}")))?;
    if cfg.schema_version != SCHEMA_VERSION {
        return Err(CliError::usage(format!(
            "config: schema_version {} is not supported (expected {SCHEMA_VERSION})",
            cfg.schema_version
        )));
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn set_creates_nested_tables() {
        let mut v = json!({"generate": {"output": "a.csv"}});
        set(&mut v, &["generate", "model", "ou", "gamma"], json!(2.0));
        assert_eq!(v["generate"]["model"]["ou"]["gamma"], json!(2.0));
        assert_eq!(v["generate"]["output"], json!("a.csv"));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(resolve(json!({"sed": 1})).is_err());
        assert!(resolve(json!({"analyze": {"input": "x", "output": "y", "lags": 3}})).is_err());
        let bad_model = json!({"generate": {"output": "o", "model": {
            "traffic": {"a": 1.0, "n": 2.5, "b": 0},
            "ou": {"gamma": 1.0, "sigma": 1.0},
            "grid": {"dt": 0.1, "count": 10}}}});
        assert!(resolve(bad_model).is_err());
    }

    #[test]
    fn schema_version_is_checked() {
        assert_eq!(resolve(json!({})).unwrap().schema_version, 1);
        assert!(resolve(json!({"schema_version": 2})).is_err());
    }

    #[test]
    fn generate_plan_needs_one_source() {
        let cfg = resolve(json!({"generate": {"output": "o"}})).unwrap();
        assert!(cfg.generate.unwrap().plan().is_err());
    }
}
