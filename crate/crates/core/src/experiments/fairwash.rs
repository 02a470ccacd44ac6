use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::axe::{axe_quality, AxeConfig};
use crate::data::{generate_synthetic, load_csv, pearson, DatasetSchema, SyntheticKind, SyntheticSpec};
use crate::domain::{predict_rows, Dataset, Explanation};
use crate::error::{Error, Result};
use crate::explainers::make_manual_explanations;
use crate::metrics::{pgi_report, pgu_report, PerturbConfig};
use crate::models::{build_scaffold, OodConfig, RuleModelSpec, Scaffold, ScaffoldSpec};
use crate::rng::rng_for;

const UNRELATED_NAMES: [&str; 4] = [
    "unrelated_column_one",
    "unrelated_column_two",
    "unrelated_column_three",
    "unrelated_column_four",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AttackConfig {
    pub seed: u64,
    /// Build models with 1..=max_foils foils.
    pub max_foils: usize,
    /// Random binary columns appended as extra foils. `None` appends two
    /// when the dataset declares no foils and none otherwise.
    pub unrelated_foils: Option<usize>,
    /// Gaussian detector noise for the `m_L*` models.
    pub sigma_ood: f64,
    /// Substitution probability for the `m_S*` models.
    pub replace_probability: f64,
    /// k-means centroids used as the substitution background.
    pub summary_clusters: usize,
    pub axe: AxeConfig,
    pub perturb: PerturbConfig,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            max_foils: 2,
            unrelated_foils: None,
            sigma_ood: 1.0,
            replace_probability: 0.5,
            summary_clusters: 10,
            axe: AxeConfig::default(),
            perturb: PerturbConfig {
                negate_pgu: true,
                ..PerturbConfig::default()
            },
        }
    }
}

/// Appends random binary columns, each drawn until its label correlation
/// is small. They become foils after any declared ones.
pub fn append_unrelated_foils(d: Dataset, count: usize, seed: u64) -> Result<Dataset> {
    if count > UNRELATED_NAMES.len() {
        return Err(Error::InvalidConfig(format!("at most {} unrelated foils", UNRELATED_NAMES.len())));
    }
    let labels: Option<Vec<f64>> = d.labels().map(|l| l.iter().map(|&v| f64::from(v)).collect());
    let mut d = d;
    for (c, name) in UNRELATED_NAMES.iter().take(count).enumerate() {
        let mut attempt = 0u64;
        let column = loop {
            let mut rng = rng_for(seed, name, attempt);
            let v: Vec<f64> = (0..d.n_rows()).map(|_| f64::from(rng.random_range(0..2u8))).collect();
            let varied = v.iter().any(|&x| x != v[0]);
            let unrelated = labels.as_ref().is_none_or(|y| pearson(&v, y).abs() < 0.1);
            if varied && unrelated {
                break v;
            }
            attempt += 1;
            if attempt > 1000 {
                return Err(Error::InvalidConfig(format!("could not draw unrelated column {c}")));
            }
        };
        let index = d.n_features();
        let mut foils = d.foil_indices().to_vec();
        foils.push(index);
        d = d.append_column(*name, &column, true)?.with_foils(foils)?;
    }
    Ok(d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackModel {
    /// `m_L1`, `m_S1`, `m_L2`, `m_S2`.
    pub name: String,
    pub scaffold: Scaffold,
    /// Fraction of rows where the scaffold matches its biased rule.
    pub agreement_with_biased: f64,
}

impl AttackModel {
    pub fn n_foils(&self) -> usize {
        self.scaffold.foils.len()
    }
}

/// Scaffold models plus the manual explanation sets they are judged on.
#[derive(Debug, Clone)]
pub struct AttackBundle {
    pub dataset: Dataset,
    pub models: Vec<AttackModel>,
    pub e_rho: Vec<Explanation>,
    pub e_phi: Vec<Explanation>,
    pub e_psi: Option<Vec<Explanation>>,
    /// One set per feature that is neither protected nor a foil.
    pub e_omega: Vec<Vec<Explanation>>,
    pub axe: AxeConfig,
    pub perturb: PerturbConfig,
}

/// Appends unrelated foils as configured and builds `m_L*`/`m_S*` scaffolds
/// for each foil count.
pub fn build_attack_bundle(d: &Dataset, cfg: &AttackConfig) -> Result<AttackBundle> {
    let rho = d
        .protected_index()
        .ok_or_else(|| Error::MissingProtected(d.id().to_string()))?;
    let extra = cfg
        .unrelated_foils
        .unwrap_or(if d.foil_indices().is_empty() { 2 } else { 0 });
    let d = append_unrelated_foils(d.clone(), extra, cfg.seed)?;
    let foils = d.foil_indices().to_vec();
    if foils.is_empty() {
        return Err(Error::NoFoils);
    }
    let max_foils = cfg.max_foils.clamp(1, 2).min(foils.len());

    let mut specs = Vec::new();
    for f in 1..=max_foils {
        for (family, ood) in [
            ("L", OodConfig::gaussian(cfg.sigma_ood, cfg.seed)),
            ("S", OodConfig::summary_substitution(&d, cfg.replace_probability, cfg.summary_clusters, cfg.seed)),
        ] {
            let spec = ScaffoldSpec {
                biased_model: RuleModelSpec::above(rho, 0.0),
                foil_models: foils[..f].iter().map(|&j| RuleModelSpec::above(j, 0.0)).collect(),
                ood,
                seed: cfg.seed,
            };
            specs.push((format!("m_{family}{f}"), spec));
        }
    }
    let models = specs
        .par_iter()
        .map(|(name, spec)| {
            let scaffold = build_scaffold(&d, spec)?;
            Ok(AttackModel {
                name: name.clone(),
                agreement_with_biased: scaffold.agreement_with_biased(&d),
                scaffold,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let e_omega = (0..d.n_features())
        .filter(|j| *j != rho && !foils.contains(j))
        .map(|j| make_manual_explanations(&d, j))
        .collect::<Result<Vec<_>>>()?;
    Ok(AttackBundle {
        e_rho: make_manual_explanations(&d, rho)?,
        e_phi: make_manual_explanations(&d, foils[0])?,
        e_psi: if max_foils >= 2 {
            Some(make_manual_explanations(&d, foils[1])?)
        } else {
            None
        },
        e_omega,
        models,
        axe: cfg.axe,
        // one top-level seed drives the perturbation draws too
        perturb: PerturbConfig {
            seed: cfg.seed,
            ..cfg.perturb.clone()
        },
        dataset: d,
    })
}

/// One detection-table row: q̄ per explanation set for one (dataset, model,
/// metric) and the two detection conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionVerdict {
    pub dataset_id: String,
    pub model: String,
    pub metric: String,
    pub q_rho: f64,
    pub q_phi: f64,
    /// Absent for single-foil models.
    pub q_psi: Option<f64>,
    pub q_omega: f64,
    pub condition_i: bool,
    pub condition_ii: Option<bool>,
    pub pass: bool,
}

impl DetectionVerdict {
    pub fn new(dataset_id: &str, model: &str, metric: &str, q: [f64; 2], q_psi: Option<f64>, q_omega: f64) -> Self {
        let mut v = Self {
            dataset_id: dataset_id.to_string(),
            model: model.to_string(),
            metric: metric.to_string(),
            q_rho: q[0],
            q_phi: q[1],
            q_psi,
            q_omega,
            condition_i: false,
            condition_ii: None,
            pass: false,
        };
        (v.condition_i, v.condition_ii, v.pass) = v.recompute();
        v
    }

    /// Condition flags derived from the stored q̄ values.
    pub fn recompute(&self) -> (bool, Option<bool>, bool) {
        let i = self.q_rho > self.q_phi;
        let ii = self.q_psi.map(|psi| self.q_rho > psi);
        (i, ii, i && ii.unwrap_or(true))
    }

    /// Smallest gap between q̄(E_ρ) and a foil set.
    pub fn margin(&self) -> f64 {
        let phi = self.q_rho - self.q_phi;
        self.q_psi.map_or(phi, |psi| phi.min(self.q_rho - psi))
    }
}

fn mean_q(r: &crate::domain::QualityReport) -> Result<f64> {
    r.aggregate_q
        .ok_or_else(|| Error::InvalidConfig(format!("{} report has no defined points", r.metric_name)))
}

/// Metrics a detection run can score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DetectionMetric {
    #[serde(rename = "axe")]
    Axe,
    #[serde(rename = "pgi")]
    Pgi,
    #[serde(rename = "-pgu")]
    NegPgu,
}

impl DetectionMetric {
    pub const ALL: [DetectionMetric; 3] = [Self::Axe, Self::Pgi, Self::NegPgu];

    pub fn name(self) -> &'static str {
        match self {
            Self::Axe => "axe",
            Self::Pgi => "pgi",
            Self::NegPgu => "-pgu",
        }
    }
}

/// Scores E_ρ, E_φ, E_ψ and E_ω under AXE, PGI and (−)PGU for every model.
pub fn run_fairwash_detection(bundle: &AttackBundle) -> Result<Vec<DetectionVerdict>> {
    run_fairwash_detection_with(bundle, &DetectionMetric::ALL)
}

pub fn run_fairwash_detection_with(bundle: &AttackBundle, metrics: &[DetectionMetric]) -> Result<Vec<DetectionVerdict>> {
    let d = &bundle.dataset;
    let mut verdicts = Vec::new();
    for model in &bundle.models {
        let psi = match (model.n_foils(), &bundle.e_psi) {
            (1, _) => None,
            (_, Some(set)) => Some(set),
            (_, None) => {
                return Err(Error::InvalidConfig(format!(
                    "{} has {} foils but no E_psi set",
                    model.name,
                    model.n_foils()
                )))
            }
        };
        let m = &model.scaffold;
        let y_preds = predict_rows(m, d);
        let mut pgu_cfg = bundle.perturb.clone();
        pgu_cfg.negate_pgu = true;
        for &metric in metrics {
            let score = |e: &[Explanation]| -> Result<f64> {
                match metric {
                    DetectionMetric::Axe => mean_q(&axe_quality(d, &y_preds, e, &bundle.axe)?),
                    DetectionMetric::Pgi => mean_q(&pgi_report(m, d, e, &bundle.perturb)?),
                    DetectionMetric::NegPgu => mean_q(&pgu_report(m, d, e, &pgu_cfg)?),
                }
            };
            let q_rho = score(&bundle.e_rho)?;
            let q_phi = score(&bundle.e_phi)?;
            let q_psi = psi.map(|s| score(s)).transpose()?;
            let omega = bundle.e_omega.iter().map(|s| score(s)).collect::<Result<Vec<_>>>()?;
            let q_omega = if omega.is_empty() {
                f64::NAN
            } else {
                omega.iter().sum::<f64>() / omega.len() as f64
            };
            verdicts.push(DetectionVerdict::new(
                d.id(),
                &model.name,
                metric.name(),
                [q_rho, q_phi],
                q_psi,
                q_omega,
            ));
        }
    }
    Ok(verdicts)
}

/// The three datasets of the detection table. Communities & Crime is not
/// bundled; a seeded synthetic stand-in with a continuous protected feature
/// takes its place.
pub fn detection_datasets(data_dir: &Path, seed: u64) -> Result<Vec<(Dataset, AttackConfig)>> {
    let base = AttackConfig {
        seed,
        ..AttackConfig::default()
    };
    let german = load_csv(
        data_dir.join("german_credit.csv"),
        &DatasetSchema::from_json_file(data_dir.join("german_credit.schema.json"))?,
    )?;
    let compas = load_csv(
        data_dir.join("compas.csv"),
        &DatasetSchema::from_json_file(data_dir.join("compas.schema.json"))?,
    )?;
    let standin = generate_synthetic(&SyntheticSpec::new(SyntheticKind::CorrelatedFoil, 1994, 8, seed))?
        .with_id(format!("communities-crime-standin:seed={seed}"));
    Ok(vec![
        (
            german,
            AttackConfig {
                unrelated_foils: Some(0),
                ..base.clone()
            },
        ),
        (
            compas,
            AttackConfig {
                unrelated_foils: Some(2),
                ..base.clone()
            },
        ),
        (
            standin,
            AttackConfig {
                unrelated_foils: Some(1),
                ..base
            },
        ),
    ])
}
