use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::Rng;

use super::{check_point, ExplainerConfig};
use crate::domain::{Dataset, Explanation, Predictor};
use crate::error::{Error, Result};
use crate::rng::rng_for;

/// Seeded background row indices (all rows when the dataset is small).
pub fn shapley_background(d: &Dataset, cfg: &ExplainerConfig) -> Vec<usize> {
    let nu = d.n_rows();
    if cfg.background_size >= nu {
        return (0..nu).collect();
    }
    let mut rows = sample(&mut rng_for(cfg.seed, "shapley-background", 0), nu, cfg.background_size).into_vec();
    rows.sort_unstable();
    rows
}

/// Coalition value: mean model output with features outside `mask` taken
/// from each background row.
struct ValueFn<'a, P: ?Sized> {
    m: &'a P,
    x: &'a [f64],
    background: Vec<&'a [f64]>,
}

impl<P: Predictor + ?Sized> ValueFn<'_, P> {
    fn value(&self, mask: &[bool]) -> f64 {
        let mut z = self.x.to_vec();
        let total: f64 = self
            .background
            .iter()
            .map(|b| {
                for (j, &keep) in mask.iter().enumerate() {
                    z[j] = if keep { self.x[j] } else { b[j] };
                }
                self.m.predict_proba(&z)
            })
            .sum();
        total / self.background.len() as f64
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn mask_of(bits: usize, n: usize) -> Vec<bool> {
    (0..n).map(|j| bits >> j & 1 == 1).collect()
}

/// Shapley values of the background-substitution game by enumerating all
/// 2^N coalitions. Exponential; intended as a reference for small N.
pub fn exact_shapley<P: Predictor + ?Sized>(m: &P, x: &[f64], d: &Dataset, cfg: &ExplainerConfig) -> Result<Vec<f64>> {
    check_point(x, d)?;
    let n = x.len();
    if n > 16 {
        return Err(Error::InvalidConfig(format!("exact Shapley over {n} features is too expensive")));
    }
    let rows = shapley_background(d, cfg);
    let v = ValueFn {
        m,
        x,
        background: rows.iter().map(|&r| d.row(r)).collect(),
    };
    let values: Vec<f64> = (0..1usize << n).map(|bits| v.value(&mask_of(bits, n))).collect();
    let mut phi = vec![0.0; n];
    for (bits, &without) in values.iter().enumerate() {
        let s = bits.count_ones() as usize;
        for (i, p) in phi.iter_mut().enumerate() {
            if bits >> i & 1 == 0 {
                let weight = 1.0 / (n as f64 * binomial(n - 1, s));
                *p += weight * (values[bits | 1 << i] - without);
            }
        }
    }
    Ok(phi)
}

/// Kernel-weighted least squares estimate of Shapley values with the
/// efficiency constraint imposed exactly. Coalitions are enumerated when
/// `samples` covers all of them, otherwise drawn in complementary pairs.
pub fn explain_kernel_shapley<P: Predictor + ?Sized>(
    m: &P,
    x: &[f64],
    row: usize,
    d: &Dataset,
    cfg: &ExplainerConfig,
) -> Result<Explanation> {
    check_point(x, d)?;
    let n = x.len();
    if cfg.samples < 2 * n {
        return Err(Error::InvalidConfig(format!(
            "kernel Shapley needs at least {} samples, got {}",
            2 * n,
            cfg.samples
        )));
    }
    if cfg.background_size == 0 {
        return Err(Error::InvalidConfig("background_size must be at least 1".into()));
    }
    let rows = shapley_background(d, cfg);
    let v = ValueFn {
        m,
        x,
        background: rows.iter().map(|&r| d.row(r)).collect(),
    };
    let base = v.value(&vec![false; n]);
    let full = m.predict_proba(x);
    let delta = full - base;
    if n == 1 {
        return Ok(Explanation::new(vec![delta], row, "kernel-shapley"));
    }

    let proper = if n < usize::BITS as usize - 1 { (1usize << n) - 2 } else { usize::MAX };
    let coalitions: Vec<(Vec<bool>, f64)> = if cfg.samples >= proper {
        (1..=proper)
            .map(|bits| {
                let s = bits.count_ones() as usize;
                let w = (n - 1) as f64 / (binomial(n, s) * (s * (n - s)) as f64);
                (mask_of(bits, n), w)
            })
            .collect()
    } else {
        // subset size drawn with total kernel mass per size, then uniform
        let size_mass: Vec<f64> = (1..n).map(|s| 1.0 / (s * (n - s)) as f64).collect();
        let mass: f64 = size_mass.iter().sum();
        let mut rng = rng_for(cfg.seed, "shapley-coalitions", row as u64);
        let mut out = Vec::with_capacity(cfg.samples);
        while out.len() + 1 < cfg.samples {
            let mut u = rng.random::<f64>() * mass;
            let mut s = n - 1;
            for (i, w) in size_mass.iter().enumerate() {
                if u < *w {
                    s = i + 1;
                    break;
                }
                u -= w;
            }
            let mut mask = vec![false; n];
            for j in sample(&mut rng, n, s) {
                mask[j] = true;
            }
            let complement: Vec<bool> = mask.iter().map(|b| !b).collect();
            out.push((mask, 1.0));
            out.push((complement, 1.0));
        }
        out
    };

    // eliminate the last feature through the efficiency constraint
    let last = n - 1;
    let mut a = DMatrix::<f64>::zeros(last, last);
    let mut rhs = DVector::<f64>::zeros(last);
    let mut z = vec![0.0; last];
    for (mask, w) in &coalitions {
        let zl = f64::from(u8::from(mask[last]));
        for j in 0..last {
            z[j] = f64::from(u8::from(mask[j])) - zl;
        }
        let y = v.value(mask) - base - zl * delta;
        for r in 0..last {
            rhs[r] += w * z[r] * y;
            for c in 0..last {
                a[(r, c)] += w * z[r] * z[c];
            }
        }
    }
    let solved = a
        .clone()
        .cholesky()
        .map(|c| c.solve(&rhs))
        .or_else(|| a.clone().svd(true, true).solve(&rhs, 1e-12).ok())
        .ok_or_else(|| Error::InvalidConfig("kernel Shapley system could not be solved".into()))?;
    let mut phi: Vec<f64> = solved.iter().copied().collect();
    phi.push(delta - phi.iter().sum::<f64>());
    Ok(Explanation::new(phi, row, "kernel-shapley"))
}
