use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use axebench::axe::{axe_rows, rows_report, AxeConfig};
use axebench::data::{generate_synthetic, load_csv, DatasetSchema, SyntheticSpec};
use axebench::experiments::{
    build_attack_bundle, principle_matrix, run_fairwash_detection_with, run_region_grid, detection_datasets,
    AttackConfig, DetectionMetric, DetectionVerdict,
};
use axebench::explainers::explain_all;
use axebench::io::{read_explanations, write_axe_rows_csv, write_explanations_csv, write_json, ExplanationSet};
use axebench::metrics::{pgi_report, pgu_report, reference_report, MetricKind, PerturbConfig};
use axebench::models::{make_rule_predictor, train_logistic, train_mlp, MlpSpec, Model, RuleModelSpec};
use axebench::{predict_rows, Dataset, Error, Explanation, Predictor, QualityReport, Result, REPORT_SCHEMA_VERSION};
use serde::Serialize;

use crate::config::{Command, RunConfig};

pub fn dispatch(cfg: &RunConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.out)?;
    cfg.write(&cfg.out)?;
    match cfg.command {
        Command::Evaluate => evaluate(cfg),
        Command::Explain => explain(cfg),
        Command::Attack => attack(cfg),
        Command::RegionGrid => region_grid(cfg),
        Command::Principles => principles(cfg),
        Command::Report => report(cfg),
    }
}

fn load_dataset(cfg: &RunConfig) -> Result<Dataset> {
    match (&cfg.dataset, &cfg.synthetic) {
        (Some(_), Some(_)) => Err(Error::InvalidConfig("give either --dataset or --synthetic, not both".into())),
        (Some(path), None) => {
            let schema = cfg
                .schema
                .as_ref()
                .ok_or_else(|| Error::InvalidConfig("--dataset needs --schema".into()))?;
            load_csv(path, &DatasetSchema::from_json_file(schema)?)
        }
        (None, Some(spec)) => generate_synthetic(&SyntheticSpec::parse(spec)?),
        (None, None) => Err(Error::InvalidConfig("no dataset: pass --dataset/--schema or --synthetic".into())),
    }
}

fn load_model(cfg: &RunConfig, d: &Dataset) -> Result<Model> {
    let spec = cfg.model.trim();
    let model: Model = match spec {
        "logistic" => train_logistic(d, 1e-3, cfg.seed)?.into(),
        "mlp" => train_mlp(
            d,
            &MlpSpec {
                seed: cfg.seed,
                ..MlpSpec::default()
            },
        )?
        .into(),
        _ if spec.starts_with("rule:") => {
            let f = &spec["rule:".len()..];
            let idx = d
                .feature_index(f)
                .or_else(|| f.parse().ok())
                .ok_or_else(|| Error::InvalidConfig(format!("unknown rule feature {f:?}")))?;
            make_rule_predictor(&RuleModelSpec::above(idx, 0.0), d.n_features())?.into()
        }
        path => Model::load_json(path)?,
    };
    if let Model::Linear(m) = &model {
        if m.coefficients().len() != d.n_features() {
            return Err(Error::LengthMismatch {
                what: "model coefficients",
                expected: d.n_features(),
                found: m.coefficients().len(),
            });
        }
    }
    Ok(model)
}

fn read_set(path: &Path, d: &Dataset, what: &'static str) -> Result<Vec<Explanation>> {
    let (names, set) = read_explanations(path)?;
    if names.len() != d.n_features() {
        return Err(Error::LengthMismatch {
            what,
            expected: d.n_features(),
            found: names.len(),
        });
    }
    if set.len() != d.n_rows() {
        return Err(Error::LengthMismatch {
            what,
            expected: d.n_rows(),
            found: set.len(),
        });
    }
    Ok(set)
}

fn explanations_for(cfg: &RunConfig, m: &Model, d: &Dataset) -> Result<Vec<Explanation>> {
    match &cfg.explanations {
        Some(path) => read_set(path, d, "explanation file"),
        None => explain_all(m, d, &cfg.explainer),
    }
}

fn fmt_q(q: Option<f64>) -> String {
    q.map_or_else(|| "undefined".to_string(), |v| format!("{v:.6}"))
}

fn evaluate(cfg: &RunConfig) -> Result<()> {
    let d = load_dataset(cfg)?;
    let m = load_model(cfg, &d)?;
    let e = explanations_for(cfg, &m, &d)?;
    let metrics = if cfg.metrics.is_empty() {
        vec![MetricKind::Axe]
    } else {
        cfg.metrics.clone()
    };
    let references = if metrics.iter().any(|k| k.is_ground_truth()) {
        let path = cfg
            .reference
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig("ground-truth metrics need --reference".into()))?;
        Some(read_set(path, &d, "reference file")?)
    } else {
        None
    };
    let perturb = PerturbConfig {
        n: cfg.n,
        num_perturbations: cfg.num_perturbations,
        sigma: cfg.sigma,
        seed: cfg.seed,
        negate_pgu: false,
    };
    let tag = e.first().map(|x| x.explainer_tag.clone()).unwrap_or_default();
    for kind in metrics {
        let report: QualityReport = match kind {
            MetricKind::Axe => {
                let axe = AxeConfig {
                    n: cfg.n,
                    k: cfg.k,
                    include_self: cfg.include_self,
                };
                let rows = axe_rows(d.features(), &predict_rows(&m, &d), &e, &axe)?;
                write_axe_rows_csv(cfg.out.join("axe_rows.csv"), &rows)?;
                rows_report(&rows, &axe)?
            }
            MetricKind::Pgi => pgi_report(&m, &d, &e, &perturb)?,
            MetricKind::Pgu => pgu_report(&m, &d, &e, &perturb)?,
            gt => reference_report(gt, &e, references.as_deref().expect("loaded above"), cfg.n)?,
        };
        let report = report.with_context(d.id(), m.descriptor(), tag.clone());
        write_json(cfg.out.join(format!("report_{}.json", kind.name())), &report)?;
        println!("{}\t{}", kind.name(), fmt_q(report.aggregate_q));
    }
    Ok(())
}

fn explain(cfg: &RunConfig) -> Result<()> {
    let d = load_dataset(cfg)?;
    let m = load_model(cfg, &d)?;
    let e = explain_all(&m, &d, &cfg.explainer)?;
    m.save_json(cfg.out.join("model.json"))?;
    write_explanations_csv(cfg.out.join("explanations.csv"), d.feature_names(), &e)?;
    write_json(cfg.out.join("explanations.json"), &ExplanationSet::new(d.feature_names(), e))?;
    println!("{} explanations from {}", d.n_rows(), cfg.explainer.kind.name());
    Ok(())
}

fn detection_metrics(cfg: &RunConfig) -> Result<Vec<DetectionMetric>> {
    if cfg.metrics.is_empty() {
        return Ok(DetectionMetric::ALL.to_vec());
    }
    cfg.metrics
        .iter()
        .map(|k| match k {
            MetricKind::Axe => Ok(DetectionMetric::Axe),
            MetricKind::Pgi => Ok(DetectionMetric::Pgi),
            MetricKind::Pgu => Ok(DetectionMetric::NegPgu),
            other => Err(Error::InvalidConfig(format!(
                "{other} needs reference explanations and cannot score an attack"
            ))),
        })
        .collect()
}

fn slug(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect()
}

#[derive(Serialize)]
struct ModelSummary {
    name: String,
    foils: Vec<String>,
    agreement_with_biased: f64,
    detector_perturbation: String,
    detector_held_out_accuracy: f64,
    warning: Option<String>,
}

#[derive(Serialize)]
struct AttackSummary {
    schema_version: u32,
    datasets: Vec<String>,
    protected: BTreeMap<String, String>,
    all_axe_pass: bool,
    verdicts: Vec<DetectionVerdict>,
}

fn attack(cfg: &RunConfig) -> Result<()> {
    let metrics = detection_metrics(cfg)?;
    let axe = AxeConfig {
        n: cfg.n,
        k: cfg.k,
        include_self: cfg.include_self,
    };
    let perturb = PerturbConfig {
        n: cfg.n,
        num_perturbations: cfg.num_perturbations,
        sigma: cfg.sigma,
        seed: cfg.seed,
        negate_pgu: true,
    };
    let jobs: Vec<(Dataset, AttackConfig)> = if cfg.dataset.is_some() || cfg.synthetic.is_some() {
        vec![(
            load_dataset(cfg)?,
            AttackConfig {
                seed: cfg.seed,
                ..AttackConfig::default()
            },
        )]
    } else {
        detection_datasets(&cfg.data_dir, cfg.seed)?
    };

    let mut all = Vec::new();
    let mut protected = BTreeMap::new();
    let mut table = String::from("dataset\tmodel\tmetric\tq_rho\tq_phi\tq_psi\tq_omega\tpass\n");
    for (d, attack_cfg) in jobs {
        let attack_cfg = AttackConfig {
            axe,
            perturb: perturb.clone(),
            ..attack_cfg
        };
        let bundle = build_attack_bundle(&d, &attack_cfg)?;
        let bd = &bundle.dataset;
        let dir = cfg.out.join(slug(bd.id()));
        std::fs::create_dir_all(&dir)?;
        let names = bd.feature_names();
        let rho = bd.protected_index().expect("bundle has a protected feature");
        protected.insert(bd.id().to_string(), names[rho].clone());
        let models: Vec<ModelSummary> = bundle
            .models
            .iter()
            .map(|m| ModelSummary {
                name: m.name.clone(),
                foils: m.scaffold.foils.iter().map(|f| names[f.feature_index].clone()).collect(),
                agreement_with_biased: m.agreement_with_biased,
                detector_perturbation: perturbation_name(&m.scaffold.detector.perturbation),
                detector_held_out_accuracy: m.scaffold.detector.held_out_accuracy,
                warning: m.scaffold.warning.clone(),
            })
            .collect();
        write_json(dir.join("models.json"), &models)?;
        write_explanations_csv(dir.join("e_rho.csv"), names, &bundle.e_rho)?;
        write_explanations_csv(dir.join("e_phi.csv"), names, &bundle.e_phi)?;
        if let Some(psi) = &bundle.e_psi {
            write_explanations_csv(dir.join("e_psi.csv"), names, psi)?;
        }
        let verdicts = run_fairwash_detection_with(&bundle, &metrics)?;
        write_json(dir.join("verdicts.json"), &verdicts)?;
        for v in &verdicts {
            let psi = v.q_psi.map_or_else(|| "-".to_string(), |q| q.to_string());
            writeln!(
                table,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                v.dataset_id,
                v.model,
                v.metric,
                v.q_rho,
                v.q_phi,
                psi,
                v.q_omega,
                if v.pass { "pass" } else { "fail" }
            )
            .expect("string write");
            println!(
                "{:<40} {:<5} {:<4} rho={:.3} phi={:.3} psi={:<5} {}",
                v.dataset_id,
                v.model,
                v.metric,
                v.q_rho,
                v.q_phi,
                v.q_psi.map_or("-".into(), |q| format!("{q:.3}")),
                if v.pass { "pass" } else { "FAIL" }
            );
        }
        all.extend(verdicts);
    }
    std::fs::write(cfg.out.join("table.tsv"), table)?;
    let axe_rows: Vec<&DetectionVerdict> = all.iter().filter(|v| v.metric == "axe").collect();
    let summary = AttackSummary {
        schema_version: REPORT_SCHEMA_VERSION,
        datasets: protected.keys().cloned().collect(),
        all_axe_pass: !axe_rows.is_empty() && axe_rows.iter().all(|v| v.pass),
        protected,
        verdicts: all,
    };
    write_json(cfg.out.join("verdicts.json"), &summary)
}

fn perturbation_name(p: &axebench::models::Perturbation) -> String {
    serde_json::to_value(p)
        .ok()
        .and_then(|v| v.get("kind").and_then(|k| k.as_str()).map(str::to_string))
        .unwrap_or_default()
}

fn grid_file(label: &str) -> String {
    format!("grid_{}.tsv", label.replace('@', "_n"))
}

fn region_grid(cfg: &RunConfig) -> Result<()> {
    let grid = run_region_grid(&cfg.region)?;
    for label in grid.grids.keys() {
        grid.write_tsv(label, cfg.out.join(grid_file(label)))?;
    }
    let summary = grid.summary();
    write_json(cfg.out.join("summary.json"), &summary)?;
    for (label, values) in &summary.value_sets {
        println!("{label}\t{}", values.join(" "));
    }
    Ok(())
}

#[derive(Serialize)]
struct PrincipleTable {
    schema_version: u32,
    seed: u64,
    results: Vec<axebench::experiments::PrincipleResult>,
}

fn principles(cfg: &RunConfig) -> Result<()> {
    let results = principle_matrix(cfg.seed)?;
    let mut tsv = String::from("metric\tP1\tP2\tP3\n");
    for r in &results {
        let [a, b, c] = r.marks();
        writeln!(tsv, "{}\t{}\t{}\t{}", r.metric, a.mark(), b.mark(), c.mark()).expect("string write");
    }
    print!("{tsv}");
    std::fs::write(cfg.out.join("principles.tsv"), tsv)?;
    write_json(
        cfg.out.join("principles.json"),
        &PrincipleTable {
            schema_version: REPORT_SCHEMA_VERSION,
            seed: cfg.seed,
            results,
        },
    )
}

fn json_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    entries.sort();
    for p in entries {
        if p.is_dir() {
            json_files(&p, out)?;
        } else if p.extension().is_some_and(|x| x == "json") {
            out.push(p);
        }
    }
    Ok(())
}

/// Collects quality reports and detection verdicts under `input` into one
/// table.
fn report(cfg: &RunConfig) -> Result<()> {
    let input = cfg
        .input
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("report needs --input <dir>".into()))?;
    let mut files = Vec::new();
    json_files(input, &mut files)?;
    let mut tsv = String::from("source\tkind\tdataset\tmodel\tmetric\tvalue\n");
    let mut found = 0usize;
    for f in &files {
        let rel = f.strip_prefix(input).unwrap_or(f).display().to_string();
        let Ok(v) = serde_json::from_str::<serde_json::Value>(&std::fs::read_to_string(f)?) else {
            continue;
        };
        if let Ok(r) = serde_json::from_value::<QualityReport>(v.clone()) {
            writeln!(
                tsv,
                "{rel}\tquality\t{}\t{}\t{}\t{}",
                r.dataset_id,
                r.model_descriptor,
                r.metric_name,
                fmt_q(r.aggregate_q)
            )
            .expect("string write");
            found += 1;
        } else if let Ok(vs) = serde_json::from_value::<Vec<DetectionVerdict>>(v) {
            for d in vs {
                writeln!(
                    tsv,
                    "{rel}\tverdict\t{}\t{}\t{}\t{}",
                    d.dataset_id,
                    d.model,
                    d.metric,
                    if d.pass { "pass" } else { "fail" }
                )
                .expect("string write");
                found += 1;
            }
        }
    }
    if found == 0 {
        return Err(Error::InvalidConfig(format!("no reports found under {}", input.display())));
    }
    print!("{tsv}");
    std::fs::write(cfg.out.join("summary.tsv"), tsv)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slugs_are_path_safe() {
        assert_eq!(slug("communities-crime-standin:seed=0"), "communities-crime-standin_seed_0");
        assert_eq!(grid_file("ra@2"), "grid_ra_n2.tsv");
    }
}
