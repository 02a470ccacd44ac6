use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{check_point, ExplainerConfig};
use crate::domain::{Dataset, Explanation, Predictor};
use crate::error::{Error, Result};
use crate::rng::rng_for;

/// Ridge penalty on the slopes, relative to the total kernel weight.
pub const RIDGE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateFit {
    pub explanation: Explanation,
    pub intercept: f64,
    /// The sample spread was too small for the data to outweigh the ridge
    /// floor; slopes are shrunk towards zero.
    pub ridge_dominated: bool,
}

/// Weighted ridge fit of `predict_proba` around `x`; the slopes are the
/// explanation.
pub fn local_surrogate_fit<P: Predictor + ?Sized>(
    m: &P,
    x: &[f64],
    row: usize,
    d: &Dataset,
    cfg: &ExplainerConfig,
) -> Result<SurrogateFit> {
    check_point(x, d)?;
    let n = x.len();
    if cfg.samples < n + 2 {
        return Err(Error::InvalidConfig(format!(
            "local surrogate needs at least {} samples, got {}",
            n + 2,
            cfg.samples
        )));
    }
    if !(cfg.sigma_perturb > 0.0) {
        return Err(Error::InvalidConfig("sigma_perturb must be positive".into()));
    }
    let width = cfg.kernel_width.unwrap_or(0.75 * (n as f64).sqrt());
    let mut rng = rng_for(cfg.seed, "local-surrogate", row as u64);

    // normal equations over centred design [1, z - x]
    let dim = n + 1;
    let mut a = DMatrix::<f64>::zeros(dim, dim);
    let mut rhs = DVector::<f64>::zeros(dim);
    let mut total = 0.0;
    let mut phi = vec![0.0; dim];
    let mut z = vec![0.0; n];
    for _ in 0..cfg.samples {
        phi[0] = 1.0;
        let mut dist2 = 0.0;
        for j in 0..n {
            let delta = cfg.sigma_perturb * rng.sample::<f64, _>(StandardNormal);
            z[j] = x[j] + delta;
            phi[j + 1] = delta;
            dist2 += delta * delta;
        }
        let w = (-dist2 / (width * width)).exp();
        let y = m.predict_proba(&z);
        total += w;
        for r in 0..dim {
            rhs[r] += w * phi[r] * y;
            for c in 0..dim {
                a[(r, c)] += w * phi[r] * phi[c];
            }
        }
    }
    if !(total > 0.0) {
        return Err(Error::InvalidConfig("surrogate kernel weights vanished".into()));
    }
    a /= total;
    rhs /= total;
    let spread = (1..dim).map(|j| a[(j, j)]).fold(0.0, f64::max);
    for j in 1..dim {
        a[(j, j)] += RIDGE_FLOOR;
    }
    let beta = a
        .clone()
        .cholesky()
        .map(|c| c.solve(&rhs))
        .or_else(|| a.clone().lu().solve(&rhs))
        .unwrap_or_else(|| DVector::zeros(dim));
    let ridge_dominated = spread < 100.0 * RIDGE_FLOOR;
    let tag = if ridge_dominated {
        "local-surrogate(ridge-dominated)"
    } else {
        "local-surrogate"
    };
    Ok(SurrogateFit {
        explanation: Explanation::new(beta.iter().skip(1).copied().collect(), row, tag),
        intercept: beta[0],
        ridge_dominated,
    })
}

pub fn explain_local_surrogate<P: Predictor + ?Sized>(
    m: &P,
    x: &[f64],
    row: usize,
    d: &Dataset,
    cfg: &ExplainerConfig,
) -> Result<Explanation> {
    local_surrogate_fit(m, x, row, d, cfg).map(|f| f.explanation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, SyntheticKind, SyntheticSpec};

    struct LinearProba;

    impl Predictor for LinearProba {
        fn predict_proba(&self, x: &[f64]) -> f64 {
            0.5 + 0.12 * x[0] - 0.05 * x[1] + 0.01 * x[2]
        }
        fn descriptor(&self) -> String {
            "linear-proba".into()
        }
    }

    fn data() -> Dataset {
        generate_synthetic(&SyntheticSpec::new(SyntheticKind::ThresholdRule, 20, 3, 1)).unwrap()
    }

    #[test]
    fn recovers_linear_slopes() {
        let d = data();
        let cfg = ExplainerConfig::default();
        let fit = local_surrogate_fit(&LinearProba, d.row(4), 4, &d, &cfg).unwrap();
        assert!(!fit.ridge_dominated);
        for (got, want) in fit.explanation.importances.iter().zip([0.12, -0.05, 0.01]) {
            assert!(((got - want) / want).abs() < 0.05, "{got} vs {want}");
        }
    }

    #[test]
    fn tiny_sigma_is_flagged() {
        let d = data();
        let cfg = ExplainerConfig {
            sigma_perturb: 1e-9,
            ..ExplainerConfig::default()
        };
        let fit = local_surrogate_fit(&LinearProba, d.row(0), 0, &d, &cfg).unwrap();
        assert!(fit.ridge_dominated);
        assert!(fit.explanation.importances.iter().all(|v| v.abs() < 1e-6));
    }

    #[test]
    fn seeded() {
        let d = data();
        let cfg = ExplainerConfig::default().with_seed(3);
        let a = explain_local_surrogate(&LinearProba, d.row(1), 1, &d, &cfg).unwrap();
        let b = explain_local_surrogate(&LinearProba, d.row(1), 1, &d, &cfg).unwrap();
        assert_eq!(a, b);
        let small = ExplainerConfig {
            samples: 4,
            ..ExplainerConfig::default()
        };
        assert!(explain_local_surrogate(&LinearProba, d.row(1), 1, &d, &small).is_err());
    }
}
