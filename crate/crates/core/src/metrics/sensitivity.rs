use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{bottom_n_features, top_n_features, Dataset, Explanation, Predictor, QualityReport};
use crate::error::{Error, Result};
use crate::rng::rng_for;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbConfig {
    pub n: usize,
    pub num_perturbations: usize,
    /// Noise scale in standardized units.
    pub sigma: f64,
    pub seed: u64,
    pub negate_pgu: bool,
}

impl Default for PerturbConfig {
    fn default() -> Self {
        Self {
            n: 1,
            num_perturbations: 100,
            sigma: 0.5,
            seed: 0,
            negate_pgu: false,
        }
    }
}

impl PerturbConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_perturbations == 0 {
            return Err(Error::InvalidConfig("num_perturbations must be at least 1".into()));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!("perturbation sigma must be positive, got {}", self.sigma)));
        }
        Ok(())
    }
}

/// Noise vectors for one datapoint: `num_perturbations` full-length draws
/// from N(0, σ²). PGI and PGU on the same row consume the same draws, each
/// applying only the entries of its own index set.
pub fn perturbation_draws(cfg: &PerturbConfig, row: usize, n_features: usize) -> Vec<Vec<f64>> {
    let mut rng = rng_for(cfg.seed, "perturbation-gap", row as u64);
    (0..cfg.num_perturbations)
        .map(|_| {
            (0..n_features)
                .map(|_| cfg.sigma * rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect()
}

fn mean_gap<P: Predictor + ?Sized>(m: &P, x: &[f64], row: usize, features: &[usize], cfg: &PerturbConfig) -> f64 {
    let base = m.predict_proba(x);
    let draws = perturbation_draws(cfg, row, x.len());
    let mut z = x.to_vec();
    let total: f64 = draws
        .iter()
        .map(|noise| {
            for &f in features {
                z[f] = x[f] + noise[f];
            }
            (m.predict_proba(&z) - base).abs()
        })
        .sum();
    total / cfg.num_perturbations as f64
}

fn check_len(x: &[f64], e: &Explanation) -> Result<()> {
    if x.len() != e.len() {
        return Err(Error::LengthMismatch {
            what: "explanation",
            expected: x.len(),
            found: e.len(),
        });
    }
    Ok(())
}

/// Mean |Δproba| when the top-n features of `e` are perturbed. Draws are
/// seeded by `e.datapoint_index`.
pub fn pgi<P: Predictor + ?Sized>(m: &P, x: &[f64], e: &Explanation, cfg: &PerturbConfig) -> Result<f64> {
    cfg.validate()?;
    check_len(x, e)?;
    let features = top_n_features(&e.importances, cfg.n)?;
    Ok(mean_gap(m, x, e.datapoint_index, &features, cfg))
}

/// As [`pgi`] but perturbing the bottom-n features; negated when
/// `negate_pgu` is set.
pub fn pgu<P: Predictor + ?Sized>(m: &P, x: &[f64], e: &Explanation, cfg: &PerturbConfig) -> Result<f64> {
    cfg.validate()?;
    check_len(x, e)?;
    let features = bottom_n_features(&e.importances, cfg.n)?;
    let v = mean_gap(m, x, e.datapoint_index, &features, cfg);
    Ok(if cfg.negate_pgu { -v } else { v })
}

fn report<P, F>(name: &str, m: &P, d: &Dataset, explanations: &[Explanation], cfg: &PerturbConfig, f: F) -> Result<QualityReport>
where
    P: Predictor + ?Sized,
    F: Fn(&P, &[f64], &Explanation, &PerturbConfig) -> Result<f64> + Sync,
{
    cfg.validate()?;
    if explanations.len() != d.n_rows() {
        return Err(Error::LengthMismatch {
            what: "explanation set",
            expected: d.n_rows(),
            found: explanations.len(),
        });
    }
    let values = explanations
        .par_iter()
        .enumerate()
        .map(|(i, e)| f(m, d.row(i), e, cfg))
        .collect::<Result<Vec<f64>>>()?;
    let tag = explanations.first().map(|e| e.explainer_tag.clone()).unwrap_or_default();
    Ok(QualityReport::from_values(name, values)?
        .with_param("n", cfg.n)
        .with_param("num_perturbations", cfg.num_perturbations)
        .with_param("sigma", cfg.sigma)
        .with_param("seed", cfg.seed)
        .with_context(d.id(), m.descriptor(), tag))
}

/// PGI for every row of `d`; `explanations[i]` explains row `i`.
pub fn pgi_report<P: Predictor + ?Sized>(m: &P, d: &Dataset, explanations: &[Explanation], cfg: &PerturbConfig) -> Result<QualityReport> {
    report("pgi", m, d, explanations, cfg, pgi::<P>)
}

pub fn pgu_report<P: Predictor + ?Sized>(m: &P, d: &Dataset, explanations: &[Explanation], cfg: &PerturbConfig) -> Result<QualityReport> {
    Ok(report("pgu", m, d, explanations, cfg, pgu::<P>)?.with_param("negated", cfg.negate_pgu))
}
