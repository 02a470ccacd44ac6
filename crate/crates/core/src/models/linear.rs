use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::sigmoid;
use crate::domain::{Dataset, Predictor};
use crate::error::{Error, Result};
use crate::rng::rng_for;

/// Coefficients and intercept of a linear score `β₀ + β·x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModelSpec {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
}

impl LinearModelSpec {
    pub fn new(coefficients: Vec<f64>, intercept: f64) -> Self {
        Self {
            coefficients,
            intercept,
        }
    }
}

/// `predict_proba = sigmoid(β₀ + β·x)` with the exact gradient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearPredictor {
    pub spec: LinearModelSpec,
    pub label: String,
}

impl LinearPredictor {
    pub fn score(&self, x: &[f64]) -> f64 {
        self.spec.intercept
            + self
                .spec
                .coefficients
                .iter()
                .zip(x)
                .map(|(b, v)| b * v)
                .sum::<f64>()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.spec.coefficients
    }
}

impl Predictor for LinearPredictor {
    fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.score(x))
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let p = self.predict_proba(x);
        let slope = p * (1.0 - p);
        Some(self.spec.coefficients.iter().map(|b| slope * b).collect())
    }

    fn descriptor(&self) -> String {
        self.label.clone()
    }
}

pub fn make_linear_predictor(spec: &LinearModelSpec, n_features: usize) -> Result<LinearPredictor> {
    if spec.coefficients.len() != n_features {
        return Err(Error::LengthMismatch {
            what: "linear coefficients",
            expected: n_features,
            found: spec.coefficients.len(),
        });
    }
    if spec
        .coefficients
        .iter()
        .chain(std::iter::once(&spec.intercept))
        .any(|v| !v.is_finite())
    {
        return Err(Error::InvalidConfig("non-finite linear coefficient".into()));
    }
    if spec.coefficients.iter().all(|&b| b == 0.0) {
        return Err(Error::InvalidConfig(
            "linear model needs at least one nonzero coefficient".into(),
        ));
    }
    let coefs: Vec<String> = spec.coefficients.iter().map(|b| b.to_string()).collect();
    Ok(LinearPredictor {
        label: format!("linear(b0={}, b=[{}])", spec.intercept, coefs.join(",")),
        spec: spec.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticConfig {
    pub l2: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            l2: 1e-3,
            epochs: 500,
            learning_rate: 0.5,
            seed: 0,
        }
    }
}

/// Full-batch gradient descent on the mean log-loss plus `l2/2 ‖β‖²`.
pub fn train_logistic(d: &Dataset, l2: f64, seed: u64) -> Result<LinearPredictor> {
    train_logistic_with(
        d,
        &LogisticConfig {
            l2,
            seed,
            ..LogisticConfig::default()
        },
    )
}

pub fn train_logistic_with(d: &Dataset, cfg: &LogisticConfig) -> Result<LinearPredictor> {
    let labels = d.labels().ok_or(Error::MissingLabels)?;
    let positives = labels.iter().filter(|&&y| y == 1).count();
    if positives == 0 || positives == labels.len() {
        return Err(Error::SingleClass);
    }
    let n = d.n_features();
    let nu = d.n_rows() as f64;
    let mut rng = rng_for(cfg.seed, "logistic-init", 0);
    let mut w: Vec<f64> = (0..n).map(|_| 0.01 * rng.sample::<f64, _>(StandardNormal)).collect();
    let mut b = 0.0;
    let mut grad = vec![0.0; n];
    for _ in 0..cfg.epochs {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut gb = 0.0;
        for (i, x) in d.features().rows().enumerate() {
            let z = b + w.iter().zip(x).map(|(a, v)| a * v).sum::<f64>();
            let r = sigmoid(z) - f64::from(labels[i]);
            for (g, v) in grad.iter_mut().zip(x) {
                *g += r * v;
            }
            gb += r;
        }
        for (wj, g) in w.iter_mut().zip(&grad) {
            *wj -= cfg.learning_rate * (g / nu + cfg.l2 * *wj);
        }
        b -= cfg.learning_rate * gb / nu;
    }
    let mut model = make_linear_predictor(&LinearModelSpec::new(w, b), n)?;
    model.label = format!("logistic(l2={}, epochs={}, seed={})", cfg.l2, cfg.epochs, cfg.seed);
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, SyntheticKind, SyntheticSpec};
    use crate::domain::{predict_rows, FeatureMatrix};

    #[test]
    fn sigmoid_at_origin_binarizes_to_one() {
        let m = make_linear_predictor(&LinearModelSpec::new(vec![0.7, 0.3], 0.0), 2).unwrap();
        assert_eq!(m.predict_proba(&[0.0, 0.0]), 0.5);
        assert_eq!(m.predict(&[0.0, 0.0]), 1);
    }

    #[test]
    fn gradient_is_chain_rule() {
        let m = make_linear_predictor(&LinearModelSpec::new(vec![0.7, 0.3], -0.2), 2).unwrap();
        let x = [1.3, -0.4];
        let p = m.predict_proba(&x);
        let g = m.gradient(&x).unwrap();
        assert!((g[0] - p * (1.0 - p) * 0.7).abs() < 1e-15);
        assert!((g[1] - p * (1.0 - p) * 0.3).abs() < 1e-15);
        // finite differences
        let h = 1e-6;
        let fd = (m.predict_proba(&[x[0] + h, x[1]]) - m.predict_proba(&[x[0] - h, x[1]])) / (2.0 * h);
        assert!((fd - g[0]).abs() < 1e-8);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        assert!(make_linear_predictor(&LinearModelSpec::new(vec![0.7], 0.0), 2).is_err());
        assert!(make_linear_predictor(&LinearModelSpec::new(vec![0.0, 0.0], 0.0), 2).is_err());
    }

    #[test]
    fn rashomon_pair_agreement_on_grid() {
        let a = make_linear_predictor(&LinearModelSpec::new(vec![0.7, 0.3], 0.0), 2).unwrap();
        let b = make_linear_predictor(&LinearModelSpec::new(vec![0.5, 0.3], 0.0), 2).unwrap();
        // oracle: compare signs of the two linear scores on a 41x41 grid
        let mut agree = 0;
        let mut total = 0;
        for i in -20..=20 {
            for j in -20..=20 {
                let x = [f64::from(i) / 10.0, f64::from(j) / 10.0];
                let (za, zb) = (0.7 * x[0] + 0.3 * x[1], 0.5 * x[0] + 0.3 * x[1]);
                if za.abs() < 1e-9 || zb.abs() < 1e-9 {
                    continue;
                }
                let (sa, sb) = (za > 0.0, zb > 0.0);
                assert_eq!(a.predict(&x) == 1, sa);
                assert_eq!(b.predict(&x) == 1, sb);
                agree += usize::from(sa == sb);
                total += 1;
            }
        }
        let rate = agree as f64 / total as f64;
        assert!(rate > 0.9 && rate < 1.0, "{rate}");
    }

    #[test]
    fn logistic_fits_threshold_rule() {
        let d = generate_synthetic(&SyntheticSpec::new(SyntheticKind::ThresholdRule, 500, 3, 1)).unwrap();
        let m = train_logistic(&d, 1e-3, 7).unwrap();
        let preds = predict_rows(&m, &d);
        let acc = preds.iter().zip(d.labels().unwrap()).filter(|(a, b)| a == b).count() as f64 / 500.0;
        assert!(acc >= 0.95, "{acc}");
        assert!(m.coefficients()[0] > 0.0);
        let again = train_logistic(&d, 1e-3, 7).unwrap();
        assert_eq!(again, m);
    }

    #[test]
    fn single_class_rejected() {
        let raw = FeatureMatrix::from_rows(&[vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let d = Dataset::from_raw("ones", raw, vec!["a".into()], Some(vec![1, 1, 1])).unwrap();
        assert!(matches!(train_logistic(&d, 0.0, 0), Err(Error::SingleClass)));
    }
}
