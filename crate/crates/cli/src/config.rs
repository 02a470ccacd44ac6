//! Run configuration and its layered resolution:
//! defaults < `AXEBENCH_*` environment < config file < command-line flags.

use std::path::{Path, PathBuf};

use axebench::experiments::RegionGridSpec;
use axebench::explainers::ExplainerConfig;
use axebench::metrics::MetricKind;
use axebench::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;
pub const CONFIG_FILE: &str = "run_config.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Evaluate,
    Explain,
    Attack,
    RegionGrid,
    Principles,
    Report,
}

/// Everything that determines a run's outputs. `jobs` only changes speed and
/// is never persisted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub command: Command,
    pub dataset: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    /// Generator string, e.g. `threshold-rule,rows=500,features=3,seed=1`.
    pub synthetic: Option<String>,
    /// `logistic`, `mlp`, `rule:<feature>` or a path to a saved model.
    pub model: String,
    pub explainer: ExplainerConfig,
    /// Precomputed explanations (CSV or JSON); computed when absent.
    pub explanations: Option<PathBuf>,
    /// Reference explanations for the ground-truth metrics.
    pub reference: Option<PathBuf>,
    /// Empty means the command's default set.
    pub metrics: Vec<MetricKind>,
    pub n: usize,
    pub k: usize,
    pub include_self: bool,
    pub num_perturbations: usize,
    pub sigma: f64,
    pub seed: u64,
    /// Directory holding the bundled attack datasets.
    pub data_dir: PathBuf,
    pub region: RegionGridSpec,
    /// Directory scanned by `report`.
    pub input: Option<PathBuf>,
    pub out: PathBuf,
    #[serde(skip)]
    pub jobs: usize,
}

impl RunConfig {
    pub fn defaults(command: Command) -> Self {
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            command,
            dataset: None,
            schema: None,
            synthetic: None,
            model: "logistic".into(),
            explainer: ExplainerConfig::default(),
            explanations: None,
            reference: None,
            metrics: Vec::new(),
            n: 1,
            k: 5,
            include_self: false,
            num_perturbations: 100,
            sigma: 0.5,
            seed: 0,
            data_dir: PathBuf::from("data"),
            region: RegionGridSpec::default(),
            input: None,
            out: PathBuf::from("out"),
            jobs: 0,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        axebench::io::write_json(dir.join(CONFIG_FILE), self)
    }
}

/// Recursive object merge; `over` wins, `null` in `over` leaves `base` alone.
pub fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                if v.is_null() {
                    continue;
                }
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

fn bad_env(key: &str, value: &str) -> Error {
    Error::InvalidConfig(format!("AXEBENCH_{key}={value:?} is not valid"))
}

/// Config fragment from `AXEBENCH_*` variables supplied by `lookup`.
pub fn env_layer(lookup: impl Fn(&str) -> Option<String>) -> Result<Value> {
    let mut obj = Map::new();
    let num = |key: &str, v: &str| -> Result<Value> {
        v.trim()
            .parse::<u64>()
            .map(Value::from)
            .or_else(|_| v.trim().parse::<f64>().map(Value::from))
            .map_err(|_| bad_env(key, v))
    };
    for key in ["DATASET", "SCHEMA", "SYNTHETIC", "MODEL", "EXPLANATIONS", "REFERENCE", "DATA_DIR", "INPUT", "OUT"] {
        if let Some(v) = lookup(key) {
            obj.insert(key.to_lowercase(), Value::String(v));
        }
    }
    for key in ["N", "K", "SEED", "NUM_PERTURBATIONS", "SIGMA"] {
        if let Some(v) = lookup(key) {
            obj.insert(key.to_lowercase(), num(key, &v)?);
        }
    }
    if let Some(v) = lookup("INCLUDE_SELF") {
        let b = match v.trim().to_ascii_lowercase().as_str() {
            "1" | "true" | "yes" => true,
            "0" | "false" | "no" | "" => false,
            _ => return Err(bad_env("INCLUDE_SELF", &v)),
        };
        obj.insert("include_self".into(), Value::Bool(b));
    }
    if let Some(v) = lookup("METRIC") {
        let metrics = v
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| s.trim().parse::<MetricKind>().map(|m| Value::String(m.name().into())))
            .collect::<Result<Vec<_>>>()?;
        obj.insert("metrics".into(), Value::Array(metrics));
    }
    if let Some(v) = lookup("EXPLAINER") {
        obj.insert("explainer".into(), serde_json::json!({ "kind": v.trim() }));
    }
    if let Some(v) = lookup("JOBS") {
        obj.insert("jobs".into(), num("JOBS", &v)?);
    }
    Ok(Value::Object(obj))
}

/// Resolves the layers into a config. `jobs` travels outside the serialized
/// form, so it is pulled out of each layer by hand.
pub fn resolve(command: Command, layers: Vec<Value>) -> Result<RunConfig> {
    let mut value = serde_json::to_value(RunConfig::defaults(command))?;
    let mut jobs = 0usize;
    for mut layer in layers {
        if let Some(obj) = layer.as_object_mut() {
            if let Some(j) = obj.remove("jobs") {
                jobs = j
                    .as_u64()
                    .ok_or_else(|| Error::InvalidConfig(format!("jobs must be a non-negative integer, got {j}")))?
                    as usize;
            }
            // the subcommand decides what runs
            obj.remove("command");
        }
        merge(&mut value, layer);
    }
    let mut cfg: RunConfig = serde_json::from_value(value)
        .map_err(|e| Error::InvalidConfig(format!("bad run configuration: {e}")))?;
    if cfg.schema_version != CONFIG_SCHEMA_VERSION {
        return Err(Error::InvalidConfig(format!(
            "unsupported config schema_version {}",
            cfg.schema_version
        )));
    }
    cfg.command = command;
    cfg.jobs = jobs;
    // one top-level seed drives every random stream
    cfg.explainer.seed = cfg.seed;
    Ok(cfg)
}

pub fn read_config_file(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path)?;
    let v: Value = serde_json::from_str(&text)?;
    if !v.is_object() {
        return Err(Error::InvalidConfig(format!("{} is not a JSON object", path.display())));
    }
    Ok(v)
}
