mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use axebench::metrics::MetricKind;
use axebench::{Error, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use config::{env_layer, read_config_file, resolve, Command};

/// Evaluate feature-importance explanations and run the benchmark
/// experiments. Settings resolve as flags > --config file > AXEBENCH_* env >
/// defaults.
#[derive(Parser)]
#[command(name = "axebench", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Score explanations with one or more metrics.
    Evaluate(Common),
    /// Compute explanations for every dataset row.
    Explain(Common),
    /// Scaffolding attack and fairwashing detection.
    Attack(Common),
    /// Ground-truth metric grids over two-feature explanations.
    RegionGrid(Common),
    /// Principle checks for every metric, with witnesses.
    Principles(Common),
    /// Summarize the reports found under --input.
    Report(Common),
}

#[derive(Args, Default)]
struct Common {
    /// JSON run configuration (e.g. a previous run's run_config.json).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Generator string, e.g. threshold-rule,rows=500,features=3,seed=1
    #[arg(long)]
    synthetic: Option<String>,
    /// logistic | mlp | rule:<feature> | path/to/model.json
    #[arg(long)]
    model: Option<String>,
    /// gradient | integrated-gradients | local-surrogate | kernel-shapley
    #[arg(long)]
    explainer: Option<String>,
    #[arg(long)]
    explanations: Option<PathBuf>,
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Repeatable; comma lists are accepted too.
    #[arg(long = "metric", value_delimiter = ',')]
    metrics: Vec<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses every logical core.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    include_self: bool,
    #[arg(long)]
    data_dir: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    /// Reference explanation for region grids, as `a,b`.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    e_star: Option<Vec<f64>>,
    #[arg(long)]
    resolution: Option<usize>,
}

impl Common {
    fn flag_layer(&self) -> Result<Value> {
        let mut o = Map::new();
        let mut put = |k: &str, v: Option<Value>| {
            if let Some(v) = v {
                o.insert(k.into(), v);
            }
        };
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| json!(p));
        put("dataset", path(&self.dataset));
        put("schema", path(&self.schema));
        put("synthetic", self.synthetic.as_ref().map(|s| json!(s)));
        put("model", self.model.as_ref().map(|s| json!(s)));
        put("explainer", self.explainer.as_ref().map(|s| json!({ "kind": s })));
        put("explanations", path(&self.explanations));
        put("reference", path(&self.reference));
        put("n", self.n.map(|v| json!(v)));
        put("k", self.k.map(|v| json!(v)));
        put("seed", self.seed.map(|v| json!(v)));
        put("out", path(&self.out));
        put("jobs", self.jobs.map(|v| json!(v)));
        put("include_self", self.include_self.then_some(json!(true)));
        put("data_dir", path(&self.data_dir));
        put("input", path(&self.input));
        if !self.metrics.is_empty() {
            let names = self
                .metrics
                .iter()
                .map(|m| m.parse::<MetricKind>().map(|m| json!(m.name())))
                .collect::<Result<Vec<_>>>()?;
            o.insert("metrics".into(), Value::Array(names));
        }
        let mut region = Map::new();
        if let Some(e) = &self.e_star {
            region.insert("e_star".into(), json!(e));
        }
        if let Some(r) = self.resolution {
            region.insert("resolution".into(), json!(r));
        }
        if !region.is_empty() {
            o.insert("region".into(), Value::Object(region));
        }
        Ok(Value::Object(o))
    }
}

fn run(cli: Cli) -> Result<()> {
    let (command, common) = match cli.command {
        Sub::Evaluate(c) => (Command::Evaluate, c),
        Sub::Explain(c) => (Command::Explain, c),
        Sub::Attack(c) => (Command::Attack, c),
        Sub::RegionGrid(c) => (Command::RegionGrid, c),
        Sub::Principles(c) => (Command::Principles, c),
        Sub::Report(c) => (Command::Report, c),
    };
    let mut layers = vec![env_layer(|k| std::env::var(format!("AXEBENCH_{k}")).ok())?];
    if let Some(path) = &common.config {
        layers.push(read_config_file(path)?);
    }
    layers.push(common.flag_layer()?);
    let cfg = resolve(command, layers)?;
    if cfg.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build_global()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    }
    commands::dispatch(&cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("axebench: error [{}]: {e}", e.module());
            ExitCode::from(2)
        }
    }
}
