use super::ExplainerConfig;
use crate::domain::{Explanation, Predictor};
use crate::error::{Error, Result};

fn gradient_of<P: Predictor + ?Sized>(m: &P, x: &[f64]) -> Result<Vec<f64>> {
    m.gradient(x).ok_or_else(|| Error::GradientUnsupported(m.descriptor()))
}

/// `∇ predict_proba(x)`.
pub fn explain_gradient<P: Predictor + ?Sized>(m: &P, x: &[f64]) -> Result<Explanation> {
    Ok(Explanation::new(gradient_of(m, x)?, 0, "gradient"))
}

/// Integrated gradients from the configured baseline, midpoint rule.
pub fn explain_integrated_gradients<P: Predictor + ?Sized>(m: &P, x: &[f64], cfg: &ExplainerConfig) -> Result<Explanation> {
    if cfg.ig_steps == 0 {
        return Err(Error::InvalidConfig("ig_steps must be at least 1".into()));
    }
    let baseline = cfg.baseline.clone().unwrap_or_else(|| vec![0.0; x.len()]);
    if baseline.len() != x.len() {
        return Err(Error::LengthMismatch {
            what: "integrated-gradients baseline",
            expected: x.len(),
            found: baseline.len(),
        });
    }
    let steps = cfg.ig_steps;
    let mut acc = vec![0.0; x.len()];
    let mut z = vec![0.0; x.len()];
    for j in 0..steps {
        let t = (j as f64 + 0.5) / steps as f64;
        for (zi, (xi, bi)) in z.iter_mut().zip(x.iter().zip(&baseline)) {
            *zi = bi + t * (xi - bi);
        }
        for (a, g) in acc.iter_mut().zip(gradient_of(m, &z)?) {
            *a += g;
        }
    }
    let e = acc
        .iter()
        .zip(x.iter().zip(&baseline))
        .map(|(a, (xi, bi))| (xi - bi) * a / steps as f64)
        .collect();
    Ok(Explanation::new(e, 0, format!("integrated-gradients(steps={steps})")))
}
