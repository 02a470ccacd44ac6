//! AXE: per-datapoint k-NN recovery of model outputs from the top-n
//! features of each explanation.

mod knn;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use knn::{knn_predict, NeighborModel};

use crate::domain::{top_n_features, Dataset, Explanation, FeatureMatrix, QualityReport};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxeConfig {
    pub n: usize,
    pub k: usize,
    /// Keep row i among its own neighbor candidates (literal algorithm).
    /// The default leaves it out.
    #[serde(default)]
    pub include_self: bool,
}

impl Default for AxeConfig {
    fn default() -> Self {
        Self {
            n: 1,
            k: 5,
            include_self: false,
        }
    }
}

impl AxeConfig {
    pub fn new(n: usize, k: usize) -> Self {
        Self {
            n,
            k,
            include_self: false,
        }
    }

    pub fn mode(&self) -> &'static str {
        if self.include_self {
            "include-self"
        } else {
            "leave-one-out"
        }
    }

    pub fn validate(&self, n_rows: usize, n_features: usize) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidConfig("AXE needs n >= 1".into()));
        }
        if self.n > n_features {
            return Err(Error::NExceedsFeatureCount {
                n: self.n,
                features: n_features,
            });
        }
        if self.k == 0 {
            return Err(Error::InvalidConfig("AXE needs k >= 1".into()));
        }
        let candidates = n_rows.saturating_sub(usize::from(!self.include_self));
        if self.k > candidates {
            return Err(Error::KExceedsCandidates { k: self.k, candidates });
        }
        Ok(())
    }
}

/// One row of an AXE evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxeRow {
    pub row: usize,
    pub features: Vec<usize>,
    pub y_hat: u8,
    pub y: u8,
    pub q: u8,
}

fn check_inputs<T: Scalar>(x: &FeatureMatrix<T>, y_preds: &[u8], explanations: &[Explanation<T>], cfg: &AxeConfig) -> Result<()> {
    if y_preds.len() != x.nrows() {
        return Err(Error::LengthMismatch {
            what: "model predictions",
            expected: x.nrows(),
            found: y_preds.len(),
        });
    }
    if explanations.len() != x.nrows() {
        return Err(Error::LengthMismatch {
            what: "explanation set",
            expected: x.nrows(),
            found: explanations.len(),
        });
    }
    cfg.validate(x.nrows(), x.ncols())
}

fn single_row<T: Scalar>(x: &FeatureMatrix<T>, y_preds: &[u8], e: &Explanation<T>, i: usize, cfg: &AxeConfig) -> Result<AxeRow> {
    if e.len() != x.ncols() {
        return Err(Error::LengthMismatch {
            what: "explanation",
            expected: x.ncols(),
            found: e.len(),
        });
    }
    let features = top_n_features(&e.importances, cfg.n)?;
    let nm = NeighborModel::new(x, features, y_preds)?;
    let y_hat = nm.predict(x.row(i), cfg.k, cfg.include_self, Some(i))?;
    Ok(AxeRow {
        row: i,
        features: nm.feature_subset().to_vec(),
        y_hat,
        y: y_preds[i],
        q: u8::from(y_hat == y_preds[i]),
    })
}

/// Per-row AXE outcomes over a feature matrix. `explanations[i]` explains
/// row `i`; `y_preds` are the model's outputs, not labels.
pub fn axe_rows<T: Scalar>(x: &FeatureMatrix<T>, y_preds: &[u8], explanations: &[Explanation<T>], cfg: &AxeConfig) -> Result<Vec<AxeRow>> {
    check_inputs(x, y_preds, explanations, cfg)?;
    explanations
        .par_iter()
        .enumerate()
        .map(|(i, e)| single_row(x, y_preds, e, i, cfg))
        .collect()
}

/// AXE report on the standardized features of `d`.
pub fn axe_quality(d: &Dataset, y_preds: &[u8], explanations: &[Explanation], cfg: &AxeConfig) -> Result<QualityReport> {
    let rows = axe_rows(d.features(), y_preds, explanations, cfg)?;
    let tag = explanations.first().map(|e| e.explainer_tag.clone()).unwrap_or_default();
    Ok(rows_report(&rows, cfg)?.with_context(d.id(), "", tag))
}

/// Wraps per-row outcomes as a report with the hyperparameters stamped in.
pub fn rows_report(rows: &[AxeRow], cfg: &AxeConfig) -> Result<QualityReport> {
    let values = rows.iter().map(|r| f64::from(r.q)).collect();
    Ok(QualityReport::from_values("axe", values)?
        .with_param("n", cfg.n)
        .with_param("k", cfg.k)
        .with_param("include_self", cfg.include_self)
        .with_param("mode", cfg.mode())
        .with_param("distance", "euclidean-standardized"))
}

/// The q for row `i` alone.
pub fn axe_quality_single(d: &Dataset, y_preds: &[u8], e: &Explanation, i: usize, cfg: &AxeConfig) -> Result<u8> {
    let x = d.features();
    if i >= x.nrows() {
        return Err(Error::IndexOutOfRange {
            what: "dataset rows",
            index: i,
            size: x.nrows(),
        });
    }
    if y_preds.len() != x.nrows() {
        return Err(Error::LengthMismatch {
            what: "model predictions",
            expected: x.nrows(),
            found: y_preds.len(),
        });
    }
    cfg.validate(x.nrows(), x.ncols())?;
    Ok(single_row(x, y_preds, e, i, cfg)?.q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, SyntheticKind, SyntheticSpec};
    use crate::explainers::make_manual_explanations;

    fn threshold(rows: usize) -> (Dataset, Vec<u8>) {
        let d = generate_synthetic(&SyntheticSpec::new(SyntheticKind::ThresholdRule, rows, 2, 7)).unwrap();
        let y = d.labels().unwrap().to_vec();
        (d, y)
    }

    #[test]
    fn generative_feature_beats_noise() {
        let (d, y) = threshold(500);
        let cfg = AxeConfig::default();
        let good = axe_quality(&d, &y, &make_manual_explanations(&d, 0).unwrap(), &cfg).unwrap();
        let noise = axe_quality(&d, &y, &make_manual_explanations(&d, 1).unwrap(), &cfg).unwrap();
        assert!(good.aggregate_q.unwrap() >= 0.98, "{good:?}");
        assert!((noise.aggregate_q.unwrap() - 0.5).abs() <= 0.08, "{:?}", noise.aggregate_q);
        assert_eq!(good.hyperparams["mode"], "leave-one-out");
        assert_eq!(good.hyperparams["k"], 5);
    }

    #[test]
    fn single_matches_report() {
        let (d, y) = threshold(60);
        let e = make_manual_explanations(&d, 1).unwrap();
        let cfg = AxeConfig::new(1, 3);
        let r = axe_quality(&d, &y, &e, &cfg).unwrap();
        for i in 0..d.n_rows() {
            let q = axe_quality_single(&d, &y, &e[i], i, &cfg).unwrap();
            assert_eq!(Some(f64::from(q)), r.per_point_q[i]);
        }
    }

    #[test]
    fn include_self_k1_is_trivially_perfect() {
        let (d, y) = threshold(80);
        let e = make_manual_explanations(&d, 1).unwrap();
        let cfg = AxeConfig {
            n: 1,
            k: 1,
            include_self: true,
        };
        assert_eq!(axe_quality(&d, &y, &e, &cfg).unwrap().aggregate_q, Some(1.0));
        let loo = AxeConfig::new(1, 1);
        assert!(axe_quality(&d, &y, &e, &loo).unwrap().aggregate_q.unwrap() < 1.0);
    }

    #[test]
    fn config_errors() {
        let (d, y) = threshold(10);
        let e = make_manual_explanations(&d, 0).unwrap();
        assert!(matches!(
            axe_quality(&d, &y, &e, &AxeConfig::new(3, 1)),
            Err(Error::NExceedsFeatureCount { .. })
        ));
        assert!(matches!(
            axe_quality(&d, &y, &e, &AxeConfig::new(1, 10)),
            Err(Error::KExceedsCandidates { k: 10, candidates: 9 })
        ));
        assert!(axe_quality(&d, &y, &e[..5], &AxeConfig::new(1, 3)).is_err());
        assert!(axe_quality(&d, &y[..5], &e, &AxeConfig::new(1, 3)).is_err());
    }
}
