use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::pearson;
use crate::domain::{Dataset, FeatureMatrix};
use crate::error::{Error, Result};
use crate::rng::rng_for;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SyntheticKind {
    /// Two isotropic Gaussian classes centred at ±separation/2 on every axis.
    GaussianBlobs,
    /// Standard normal features with `y = 1[x0 > 0]`.
    ThresholdRule,
    /// Correlated Gaussian block with `y = 1[x0 > 0]` plus a trailing binary
    /// column independent of the labels, marked as a foil.
    CorrelatedFoil,
}

impl FromStr for SyntheticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian-blobs" => Ok(Self::GaussianBlobs),
            "threshold-rule" => Ok(Self::ThresholdRule),
            "correlated-foil" => Ok(Self::CorrelatedFoil),
            other => Err(Error::UnknownGenerator(other.to_string())),
        }
    }
}

impl fmt::Display for SyntheticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::GaussianBlobs => "gaussian-blobs",
            Self::ThresholdRule => "threshold-rule",
            Self::CorrelatedFoil => "correlated-foil",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub kind: SyntheticKind,
    pub n_rows: usize,
    pub n_features: usize,
    pub seed: u64,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

impl SyntheticSpec {
    pub fn new(kind: SyntheticKind, n_rows: usize, n_features: usize, seed: u64) -> Self {
        Self {
            kind,
            n_rows,
            n_features,
            seed,
            params: BTreeMap::new(),
        }
    }

    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    /// Parses `kind[,key=value...]`, e.g. `threshold-rule,rows=500,features=4,seed=1`.
    /// Keys other than `rows`, `features` and `seed` go to `params`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut parts = text.split(',');
        let kind: SyntheticKind = parts.next().unwrap_or("").trim().parse()?;
        let mut spec = Self::new(kind, 200, 4, 0);
        for part in parts {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("expected key=value, got {part:?}")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad number in {part:?}")))?;
            match k.trim() {
                "rows" => spec.n_rows = v as usize,
                "features" => spec.n_features = v as usize,
                "seed" => spec.seed = v as u64,
                other => {
                    spec.params.insert(other.to_string(), v);
                }
            }
        }
        Ok(spec)
    }

    fn param(&self, key: &str, default: f64) -> f64 {
        self.params.get(key).copied().unwrap_or(default)
    }

    pub fn dataset_id(&self) -> String {
        format!(
            "synthetic:{}:rows={}:features={}:seed={}",
            self.kind, self.n_rows, self.n_features, self.seed
        )
    }
}

const FOIL_CORRELATION_LIMIT: f64 = 0.15;

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    if spec.n_rows < 2 || spec.n_features < 2 {
        return Err(Error::InvalidConfig(
            "synthetic data needs at least 2 rows and 2 features".into(),
        ));
    }
    let (nu, n) = (spec.n_rows, spec.n_features);
    let mut rng = rng_for(spec.seed, "synthetic", 0);
    let mut values = Vec::with_capacity(nu * n);
    let mut labels = Vec::with_capacity(nu);
    let names: Vec<String> = (0..n).map(|j| format!("x{j}")).collect();

    match spec.kind {
        SyntheticKind::GaussianBlobs => {
            let half = spec.param("separation", 2.0) / 2.0;
            for _ in 0..nu {
                let y: u8 = rng.random_range(0..2);
                let centre = if y == 1 { half } else { -half };
                for _ in 0..n {
                    let z: f64 = rng.sample(StandardNormal);
                    values.push(centre + z);
                }
                labels.push(y);
            }
        }
        SyntheticKind::ThresholdRule => {
            for _ in 0..nu {
                let start = values.len();
                for _ in 0..n {
                    values.push(rng.sample::<f64, _>(StandardNormal));
                }
                labels.push(u8::from(values[start] > 0.0));
            }
        }
        SyntheticKind::CorrelatedFoil => {
            let rho = spec.param("correlation", 0.5).clamp(0.0, 0.99);
            let (a, b) = (rho.sqrt(), (1.0 - rho).sqrt());
            for _ in 0..nu {
                let common: f64 = rng.sample(StandardNormal);
                let start = values.len();
                for _ in 0..n - 1 {
                    let z: f64 = rng.sample(StandardNormal);
                    values.push(a * common + b * z);
                }
                labels.push(u8::from(values[start] > 0.0));
                values.push(0.0); // foil placeholder, drawn below
            }
            let y: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();
            let mut attempt = 0u64;
            loop {
                let mut foil_rng = rng_for(spec.seed, "synthetic-foil", attempt);
                let foil: Vec<f64> = (0..nu).map(|_| f64::from(foil_rng.random_range(0..2u8))).collect();
                let constant = foil.iter().all(|&v| v == foil[0]);
                if !constant && pearson(&foil, &y).abs() < FOIL_CORRELATION_LIMIT {
                    for (i, v) in foil.into_iter().enumerate() {
                        values[i * n + n - 1] = v;
                    }
                    break;
                }
                attempt += 1;
                if attempt > 1000 {
                    return Err(Error::InvalidConfig(
                        "could not draw an uncorrelated foil column".into(),
                    ));
                }
            }
        }
    }

    let raw = FeatureMatrix::from_flat(nu, n, values)?;
    let mut d = Dataset::from_raw(spec.dataset_id(), raw, names, Some(labels))?;
    if d.n_features() != n {
        return Err(Error::InvalidDataset("generated a constant column".into()));
    }
    if spec.kind == SyntheticKind::CorrelatedFoil {
        d.metadata_mut().synthetic_columns.push(n - 1);
        d = d.with_protected(Some(0))?.with_foils(vec![n - 1])?;
    }
    Ok(d)
}
