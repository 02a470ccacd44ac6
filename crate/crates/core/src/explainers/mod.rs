//! Feature-importance explainers. All of them explain `predict_proba`.

mod gradient;
mod shapley;
mod surrogate;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{Dataset, Explanation, Predictor};
use crate::error::{Error, Result};

pub use gradient::{explain_gradient, explain_integrated_gradients};
pub use shapley::{exact_shapley, explain_kernel_shapley, shapley_background};
pub use surrogate::{explain_local_surrogate, local_surrogate_fit, SurrogateFit, RIDGE_FLOOR};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExplainerKind {
    Gradient,
    IntegratedGradients,
    LocalSurrogate,
    KernelShapley,
    Manual,
}

impl ExplainerKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Gradient => "gradient",
            Self::IntegratedGradients => "integrated-gradients",
            Self::LocalSurrogate => "local-surrogate",
            Self::KernelShapley => "kernel-shapley",
            Self::Manual => "manual",
        }
    }
}

impl fmt::Display for ExplainerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExplainerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Self::Gradient,
            Self::IntegratedGradients,
            Self::LocalSurrogate,
            Self::KernelShapley,
            Self::Manual,
        ]
        .into_iter()
        .find(|k| k.name() == s)
        .ok_or_else(|| Error::InvalidConfig(format!("unknown explainer {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExplainerConfig {
    pub kind: ExplainerKind,
    /// Surrogate perturbations, or Shapley coalitions.
    pub samples: usize,
    pub sigma_perturb: f64,
    /// Surrogate kernel width; `None` means `0.75 * sqrt(N)`.
    pub kernel_width: Option<f64>,
    /// Integrated-gradients baseline; `None` means the origin (the feature
    /// means, in standardized units).
    pub baseline: Option<Vec<f64>>,
    pub ig_steps: usize,
    pub background_size: usize,
    /// Feature marked important by the manual explainer.
    pub important_index: Option<usize>,
    pub seed: u64,
}

impl Default for ExplainerConfig {
    fn default() -> Self {
        Self {
            kind: ExplainerKind::Gradient,
            samples: 1000,
            sigma_perturb: 0.5,
            kernel_width: None,
            baseline: None,
            ig_steps: 64,
            background_size: 100,
            important_index: None,
            seed: 0,
        }
    }
}

impl ExplainerConfig {
    pub fn new(kind: ExplainerKind) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

fn check_point(x: &[f64], d: &Dataset) -> Result<()> {
    if x.len() != d.n_features() {
        return Err(Error::LengthMismatch {
            what: "datapoint",
            expected: d.n_features(),
            found: x.len(),
        });
    }
    Ok(())
}

/// One-hot explanations (1.0 at `important_index`) for every row of `d`.
pub fn make_manual_explanations(d: &Dataset, important_index: usize) -> Result<Vec<Explanation>> {
    let n = d.n_features();
    if important_index >= n {
        return Err(Error::IndexOutOfRange {
            what: "features",
            index: important_index,
            size: n,
        });
    }
    let tag = format!("manual:{}", d.feature_names()[important_index]);
    Ok((0..d.n_rows())
        .map(|i| {
            let mut v = vec![0.0; n];
            v[important_index] = 1.0;
            Explanation::new(v, i, tag.clone())
        })
        .collect())
}

/// Explains row `i` of `d` with the configured explainer.
pub fn explain_row<P: Predictor + ?Sized>(m: &P, d: &Dataset, i: usize, cfg: &ExplainerConfig) -> Result<Explanation> {
    let x = d.row(i);
    let mut e = match cfg.kind {
        ExplainerKind::Gradient => explain_gradient(m, x)?,
        ExplainerKind::IntegratedGradients => explain_integrated_gradients(m, x, cfg)?,
        ExplainerKind::LocalSurrogate => explain_local_surrogate(m, x, i, d, cfg)?,
        ExplainerKind::KernelShapley => explain_kernel_shapley(m, x, i, d, cfg)?,
        ExplainerKind::Manual => {
            let idx = cfg
                .important_index
                .ok_or_else(|| Error::InvalidConfig("manual explainer needs an important feature".into()))?;
            return make_manual_explanations(d, idx).map(|mut v| v.swap_remove(i));
        }
    };
    e.datapoint_index = i;
    Ok(e)
}

/// Explanations for every row of `d`, in row order.
pub fn explain_all<P: Predictor + ?Sized>(m: &P, d: &Dataset, cfg: &ExplainerConfig) -> Result<Vec<Explanation>> {
    if cfg.kind == ExplainerKind::Manual {
        let idx = cfg
            .important_index
            .ok_or_else(|| Error::InvalidConfig("manual explainer needs an important feature".into()))?;
        return make_manual_explanations(d, idx);
    }
    (0..d.n_rows())
        .into_par_iter()
        .map(|i| explain_row(m, d, i, cfg))
        .collect()
}
