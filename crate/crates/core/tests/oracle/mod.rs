//! Straight-from-definition implementations used as test oracles, plus a
//! seeded generator of small random instances. Shared by the core oracle
//! tests and the CLI acceptance suite.
#![allow(dead_code)]

use axebench::axe::{axe_quality, AxeConfig};
use axebench::metrics::{pgi_report, pgu_report, reference_report, MetricKind, PerturbConfig};
use axebench::models::{make_linear_predictor, LinearModelSpec, LinearPredictor};
use axebench::rng::rng_for;
use axebench::{predict_rows, Dataset, Explanation, FeatureMatrix, Predictor};
use rand::Rng;
use rand_distr::StandardNormal;

/// |e| descending, index ascending; computed by full comparison sort on keys.
pub fn top(e: &[f64], n: usize) -> Vec<usize> {
    let mut keyed: Vec<(f64, usize)> = e.iter().enumerate().map(|(i, v)| (-v.abs(), i)).collect();
    keyed.sort_by(|a, b| a.partial_cmp(b).unwrap());
    keyed.into_iter().take(n).map(|(_, i)| i).collect()
}

pub fn bottom(e: &[f64], n: usize) -> Vec<usize> {
    let mut keyed: Vec<(f64, usize)> = e.iter().enumerate().map(|(i, v)| (v.abs(), i)).collect();
    keyed.sort_by(|a, b| a.partial_cmp(b).unwrap());
    keyed.into_iter().take(n).map(|(_, i)| i).collect()
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

pub fn fa(e: &[f64], s: &[f64], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let (a, b) = (top(e, n), top(s, n));
    let mut c = 0;
    for f in &a {
        for g in &b {
            if f == g {
                c += 1;
            }
        }
    }
    c as f64 / n as f64
}

pub fn ra(e: &[f64], s: &[f64], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let (a, b) = (top(e, n), top(s, n));
    (0..n).filter(|&j| a[j] == b[j]).count() as f64 / n as f64
}

pub fn sa(e: &[f64], s: &[f64], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let (a, b) = (top(e, n), top(s, n));
    a.iter().filter(|f| b.contains(f) && sign(e[**f]) == sign(s[**f])).count() as f64 / n as f64
}

pub fn sra(e: &[f64], s: &[f64], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let (a, b) = (top(e, n), top(s, n));
    (0..n).filter(|&j| a[j] == b[j] && sign(e[a[j]]) == sign(s[a[j]])).count() as f64 / n as f64
}

/// Fractional rank by counting: 1 + #strictly larger + (#ties excluding self)/2.
pub fn frac_ranks(e: &[f64]) -> Vec<f64> {
    (0..e.len())
        .map(|i| {
            let larger = e.iter().filter(|v| v.abs() > e[i].abs()).count();
            let ties = e.iter().filter(|v| v.abs() == e[i].abs()).count() - 1;
            1.0 + larger as f64 + ties as f64 / 2.0
        })
        .collect()
}

/// Spearman as the Pearson correlation of rank vectors, in the integer
/// covariance form on doubled ranks.
pub fn rc(e: &[f64], s: &[f64]) -> Option<f64> {
    let a: Vec<i64> = frac_ranks(e).iter().map(|r| (2.0 * r) as i64).collect();
    let b: Vec<i64> = frac_ranks(s).iter().map(|r| (2.0 * r) as i64).collect();
    let n = a.len() as i64;
    let (sa, sb): (i64, i64) = (a.iter().sum(), b.iter().sum());
    let sab: i64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    let saa: i64 = a.iter().map(|x| x * x).sum();
    let sbb: i64 = b.iter().map(|x| x * x).sum();
    let cov = n * sab - sa * sb;
    let va = n * saa - sa * sa;
    let vb = n * sbb - sb * sb;
    if va == 0 || vb == 0 {
        return None;
    }
    Some((cov as f64 / ((va as f64) * (vb as f64)).sqrt()).clamp(-1.0, 1.0))
}

pub fn pra(e: &[f64], s: &[f64]) -> Option<f64> {
    let len = e.len();
    if len < 2 {
        return None;
    }
    let cmp = |v: &[f64], i: usize, j: usize| v[i].abs().partial_cmp(&v[j].abs()).unwrap();
    let mut agree = 0;
    let mut pairs = 0;
    for i in 0..len {
        for j in 0..len {
            if i < j {
                pairs += 1;
                if cmp(e, i, j) == cmp(s, i, j) {
                    agree += 1;
                }
            }
        }
    }
    Some(agree as f64 / pairs as f64)
}

/// k-NN vote by sorting every candidate on (distance, index).
pub fn axe_point(x: &FeatureMatrix<f64>, y_preds: &[u8], e: &[f64], i: usize, n: usize, k: usize, include_self: bool) -> f64 {
    let feats = top(e, n);
    let mut cand: Vec<(f64, usize)> = (0..x.nrows())
        .filter(|&j| include_self || j != i)
        .map(|j| {
            let d: f64 = feats.iter().map(|&f| (x.get(i, f) - x.get(j, f)).powi(2)).sum();
            (d, j)
        })
        .collect();
    cand.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let ones = cand[..k].iter().filter(|(_, j)| y_preds[*j] == 1).count();
    let y_hat = u8::from(2 * ones > k);
    f64::from(u8::from(y_hat == y_preds[i]))
}

pub fn perturbation_gap<P: Predictor>(m: &P, x: &[f64], feats: &[usize], draws: &[Vec<f64>]) -> f64 {
    let base = m.predict_proba(x);
    let mut total = 0.0;
    for noise in draws {
        let z: Vec<f64> = (0..x.len())
            .map(|f| if feats.contains(&f) { x[f] + noise[f] } else { x[f] })
            .collect();
        total += (m.predict_proba(&z) - base).abs();
    }
    total / draws.len() as f64
}

pub struct Instance {
    pub d: Dataset,
    pub model: LinearPredictor,
    pub y_preds: Vec<u8>,
    pub e: Vec<Explanation>,
    pub e_star: Vec<Explanation>,
    pub n: usize,
    pub k: usize,
    pub include_self: bool,
}

/// Coarse integer values half the time so that ties in importance and in
/// neighbour distance actually occur.
fn value(rng: &mut impl Rng, coarse: bool) -> f64 {
    if coarse {
        f64::from(rng.random_range(-3i32..=3))
    } else {
        rng.sample::<f64, _>(StandardNormal)
    }
}

/// Random instance with ν ≤ 30 and N ≤ 4.
pub fn instance(seed: u64) -> Instance {
    let mut rng = rng_for(seed, "oracle-instance", 0);
    loop {
        let nu = rng.random_range(6..=30usize);
        let big_n = rng.random_range(1..=4usize);
        let coarse = rng.random_bool(0.5);
        let raw: Vec<f64> = (0..nu * big_n).map(|_| value(&mut rng, coarse)).collect();
        let names = (0..big_n).map(|j| format!("f{j}")).collect();
        let Ok(d) = Dataset::from_raw(format!("oracle:{seed}"), FeatureMatrix::from_flat(nu, big_n, raw).unwrap(), names, None) else {
            continue;
        };
        if d.n_features() != big_n {
            continue;
        }
        let coefs: Vec<f64> = (0..big_n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let model = make_linear_predictor(&LinearModelSpec::new(coefs, 0.1), big_n).unwrap();
        let y_preds = predict_rows(&model, &d);
        let ecoarse = rng.random_bool(0.5);
        let mut set = |tag: &str| -> Vec<Explanation> {
            (0..nu)
                .map(|i| Explanation::new((0..big_n).map(|_| value(&mut rng, ecoarse)).collect(), i, tag))
                .collect()
        };
        let e = set("e");
        let e_star = set("e_star");
        let n = rng.random_range(1..=big_n);
        let include_self = rng.random_bool(0.3);
        let k = rng.random_range(1..=(nu - 1).min(7));
        return Instance {
            d,
            model,
            y_preds,
            e,
            e_star,
            n,
            k,
            include_self,
        };
    }
}

/// Compares every metric on one instance against the oracles. Agreement
/// metrics and AXE must match bit-for-bit; rank correlation and the
/// perturbation metrics within 1e-12.
pub fn check_instance(seed: u64) -> Result<(), String> {
    let inst = instance(seed);
    let Instance {
        d, model, y_preds, e, e_star, n, k, include_self,
    } = &inst;
    let big_n = d.n_features();
    let ctx = format!("seed={seed} nu={} N={big_n} n={n} k={k} self={include_self}", d.n_rows());
    let per_point = |kind: MetricKind| -> Result<Vec<Option<f64>>, String> {
        reference_report(kind, e, e_star, *n)
            .map(|r| r.per_point_q)
            .map_err(|err| format!("{ctx}: {kind} errored: {err}"))
    };
    type Exact = fn(&[f64], &[f64], usize) -> f64;
    let exact: [(MetricKind, Exact); 4] = [(MetricKind::Fa, fa), (MetricKind::Ra, ra), (MetricKind::Sa, sa), (MetricKind::Sra, sra)];
    for (kind, f) in exact {
        let got = per_point(kind)?;
        for (i, g) in got.iter().enumerate() {
            let want = f(&e[i].importances, &e_star[i].importances, *n);
            if *g != Some(want) {
                return Err(format!("{ctx}: {kind} row {i}: {g:?} vs {want}"));
            }
        }
    }
    let got = per_point(MetricKind::Rc)?;
    for (i, g) in got.iter().enumerate() {
        let want = rc(&e[i].importances, &e_star[i].importances);
        let ok = match (g, want) {
            (None, None) => true,
            (Some(a), Some(b)) => (a - b).abs() <= 1e-12,
            _ => false,
        };
        if !ok {
            return Err(format!("{ctx}: rc row {i}: {g:?} vs {want:?}"));
        }
    }
    match (reference_report(MetricKind::Pra, e, e_star, *n), big_n) {
        (Err(_), 1) => {}
        (Ok(r), m) if m >= 2 => {
            for (i, g) in r.per_point_q.iter().enumerate() {
                let want = pra(&e[i].importances, &e_star[i].importances);
                if *g != want {
                    return Err(format!("{ctx}: pra row {i}: {g:?} vs {want:?}"));
                }
            }
        }
        (r, _) => return Err(format!("{ctx}: pra unexpected outcome {:?}", r.map(|r| r.aggregate_q))),
    }

    let cfg = AxeConfig {
        n: *n,
        k: *k,
        include_self: *include_self,
    };
    let report = axe_quality(d, y_preds, e, &cfg).map_err(|err| format!("{ctx}: axe errored: {err}"))?;
    for i in 0..d.n_rows() {
        let want = axe_point(d.features(), y_preds, &e[i].importances, i, *n, *k, *include_self);
        if report.per_point_q[i] != Some(want) {
            return Err(format!("{ctx}: axe row {i}: {:?} vs {want}", report.per_point_q[i]));
        }
    }

    let pcfg = PerturbConfig {
        n: *n,
        num_perturbations: 20,
        seed,
        ..PerturbConfig::default()
    };
    let pgi_r = pgi_report(model, d, e, &pcfg).map_err(|err| format!("{ctx}: pgi errored: {err}"))?;
    let pgu_r = pgu_report(model, d, e, &pcfg).map_err(|err| format!("{ctx}: pgu errored: {err}"))?;
    for i in 0..d.n_rows() {
        // the oracle regenerates the draws from the documented stream
        let mut stream = rng_for(seed, "perturbation-gap", i as u64);
        let draws: Vec<Vec<f64>> = (0..pcfg.num_perturbations)
            .map(|_| (0..big_n).map(|_| pcfg.sigma * stream.sample::<f64, _>(StandardNormal)).collect())
            .collect();
        let x = d.row(i);
        let want_i = perturbation_gap(model, x, &top(&e[i].importances, *n), &draws);
        let want_u = perturbation_gap(model, x, &bottom(&e[i].importances, *n), &draws);
        let gi = pgi_r.per_point_q[i].unwrap();
        let gu = pgu_r.per_point_q[i].unwrap();
        if (gi - want_i).abs() > 1e-12 || (gu - want_u).abs() > 1e-12 {
            return Err(format!("{ctx}: perturbation row {i}: pgi {gi} vs {want_i}, pgu {gu} vs {want_u}"));
        }
    }
    Ok(())
}
