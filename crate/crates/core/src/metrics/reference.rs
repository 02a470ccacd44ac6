use serde::{Deserialize, Serialize};

use super::MetricKind;
use crate::domain::{rank_vector, top_n_features, Explanation, QualityReport};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A generated explanation `e`, a reference `e_star` and the top-n cutoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthPair<T = f64> {
    pub e: Vec<T>,
    pub e_star: Vec<T>,
    pub n: usize,
}

impl<T: Scalar> GroundTruthPair<T> {
    pub fn new(e: Vec<T>, e_star: Vec<T>, n: usize) -> Result<Self> {
        check(&e, &e_star, n)?;
        Ok(Self { e, e_star, n })
    }

    pub fn from_explanations(e: &Explanation<T>, e_star: &Explanation<T>, n: usize) -> Result<Self> {
        Self::new(e.importances.clone(), e_star.importances.clone(), n)
    }

    pub fn fa(&self) -> Result<T> {
        feature_agreement(&self.e, &self.e_star, self.n)
    }

    pub fn ra(&self) -> Result<T> {
        rank_agreement(&self.e, &self.e_star, self.n)
    }

    pub fn sa(&self) -> Result<T> {
        sign_agreement(&self.e, &self.e_star, self.n)
    }

    pub fn sra(&self) -> Result<T> {
        signed_rank_agreement(&self.e, &self.e_star, self.n)
    }

    pub fn rc(&self) -> Result<Option<T>> {
        rank_correlation(&self.e, &self.e_star)
    }

    pub fn pra(&self) -> Result<T> {
        pairwise_rank_agreement(&self.e, &self.e_star)
    }

    /// Dispatch by metric; `None` is the undefined marker.
    pub fn metric(&self, kind: MetricKind) -> Result<Option<T>> {
        match kind {
            MetricKind::Fa => self.fa().map(Some),
            MetricKind::Ra => self.ra().map(Some),
            MetricKind::Sa => self.sa().map(Some),
            MetricKind::Sra => self.sra().map(Some),
            MetricKind::Rc => self.rc(),
            MetricKind::Pra => self.pra().map(Some),
            other => Err(Error::InvalidConfig(format!(
                "{other} is not a ground-truth metric"
            ))),
        }
    }
}

fn check<T>(e: &[T], e_star: &[T], n: usize) -> Result<()> {
    if e.len() != e_star.len() {
        return Err(Error::LengthMismatch {
            what: "reference explanation",
            expected: e.len(),
            found: e_star.len(),
        });
    }
    if n > e.len() {
        return Err(Error::NExceedsFeatureCount {
            n,
            features: e.len(),
        });
    }
    Ok(())
}

fn ratio<T: Scalar>(count: usize, n: usize) -> T {
    if n == 0 {
        T::zero()
    } else {
        T::of(count as f64) / T::of(n as f64)
    }
}

/// Both top-n lists, after validation.
fn tops<T: Scalar>(e: &[T], e_star: &[T], n: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    check(e, e_star, n)?;
    Ok((top_n_features(e, n)?, top_n_features(e_star, n)?))
}

/// Shared top-n features, out of n.
pub fn feature_agreement<T: Scalar>(e: &[T], e_star: &[T], n: usize) -> Result<T> {
    let (a, b) = tops(e, e_star, n)?;
    Ok(ratio(a.iter().filter(|f| b.contains(f)).count(), n))
}

/// Shared top-n features holding the same rank position, out of n.
pub fn rank_agreement<T: Scalar>(e: &[T], e_star: &[T], n: usize) -> Result<T> {
    let (a, b) = tops(e, e_star, n)?;
    Ok(ratio(a.iter().zip(&b).filter(|(x, y)| x == y).count(), n))
}

/// Shared top-n features with matching importance sign, out of n.
pub fn sign_agreement<T: Scalar>(e: &[T], e_star: &[T], n: usize) -> Result<T> {
    let (a, b) = tops(e, e_star, n)?;
    let count = a
        .iter()
        .filter(|&&f| b.contains(&f) && e[f].sign_class() == e_star[f].sign_class())
        .count();
    Ok(ratio(count, n))
}

/// Shared top-n features matching on rank position and sign, out of n.
pub fn signed_rank_agreement<T: Scalar>(e: &[T], e_star: &[T], n: usize) -> Result<T> {
    let (a, b) = tops(e, e_star, n)?;
    let count = a
        .iter()
        .zip(&b)
        .filter(|&(&x, &y)| x == y && e[x].sign_class() == e_star[x].sign_class())
        .count();
    Ok(ratio(count, n))
}

/// Spearman correlation of the fractional rank vectors. `None` when either
/// ranking is constant.
pub fn rank_correlation<T: Scalar>(e: &[T], e_star: &[T]) -> Result<Option<T>> {
    check(e, e_star, 0)?;
    let (ra, rb) = (rank_vector(e), rank_vector(e_star));
    if ra.is_empty() {
        return Ok(None);
    }
    let len = T::of(ra.len() as f64);
    let ma = ra.iter().copied().sum::<T>() / len;
    let mb = rb.iter().copied().sum::<T>() / len;
    let (mut sab, mut saa, mut sbb) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in ra.iter().zip(&rb) {
        let (dx, dy) = (x - ma, y - mb);
        sab = sab + dx * dy;
        saa = saa + dx * dx;
        sbb = sbb + dy * dy;
    }
    if saa == T::zero() || sbb == T::zero() {
        return Ok(None);
    }
    let rho = sab / (saa * sbb).sqrt();
    Ok(Some(rho.max(-T::one()).min(T::one())))
}

fn magnitude_order<T: Scalar>(v: &[T], i: usize, j: usize) -> i8 {
    (v[i].abs() - v[j].abs()).sign_class()
}

/// Fraction of the C(N,2) feature pairs whose magnitude ordering agrees;
/// a tie agrees only with a tie.
pub fn pairwise_rank_agreement<T: Scalar>(e: &[T], e_star: &[T]) -> Result<T> {
    check(e, e_star, 0)?;
    let len = e.len();
    if len < 2 {
        return Err(Error::InvalidConfig(
            "pairwise rank agreement needs at least two features".into(),
        ));
    }
    let mut agree = 0usize;
    for i in 0..len {
        for j in i + 1..len {
            if magnitude_order(e, i, j) == magnitude_order(e_star, i, j) {
                agree += 1;
            }
        }
    }
    Ok(ratio(agree, len * (len - 1) / 2))
}

/// Ground-truth metric over an explanation set against matching references.
pub fn reference_report(
    kind: MetricKind,
    explanations: &[Explanation],
    references: &[Explanation],
    n: usize,
) -> Result<QualityReport> {
    if explanations.len() != references.len() {
        return Err(Error::LengthMismatch {
            what: "reference explanation set",
            expected: explanations.len(),
            found: references.len(),
        });
    }
    let per_point = explanations
        .iter()
        .zip(references)
        .map(|(e, r)| GroundTruthPair::from_explanations(e, r, n)?.metric(kind))
        .collect::<Result<Vec<_>>>()?;
    let tag = explanations.first().map(|e| e.explainer_tag.clone()).unwrap_or_default();
    Ok(QualityReport::new(kind.name(), per_point)?
        .with_param("n", n)
        .with_context("", "", tag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn all(e: &[f64], s: &[f64], n: usize) -> [f64; 5] {
        [
            feature_agreement(e, s, n).unwrap(),
            rank_agreement(e, s, n).unwrap(),
            sign_agreement(e, s, n).unwrap(),
            signed_rank_agreement(e, s, n).unwrap(),
            pairwise_rank_agreement(e, s).unwrap(),
        ]
    }

    #[test]
    fn feature_agreement_examples() {
        assert_eq!(feature_agreement(&[0.1, 0.9], &[0.3, -0.2], 0).unwrap(), 0.0);
        assert_eq!(feature_agreement(&[0.1, 0.9], &[0.3, -0.2], 2).unwrap(), 1.0);
        assert_eq!(feature_agreement(&[0.1, 0.9], &[0.3, -0.2], 1).unwrap(), 0.0);
        assert_eq!(feature_agreement(&[0.1, 0.9], &[0.2, 0.3], 1).unwrap(), 1.0);
        assert!(matches!(
            feature_agreement(&[0.1, 0.9], &[0.3], 1),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn rank_and_sign_examples() {
        let s = [0.7, 0.3];
        assert_eq!(rank_agreement(&[0.6, 0.2], &s, 2).unwrap(), 1.0);
        assert_eq!(rank_agreement(&[0.2, 0.6], &s, 2).unwrap(), 0.0);
        assert_eq!(sign_agreement(&[0.6, 0.2], &s, 2).unwrap(), 1.0);
        assert_eq!(sign_agreement(&[-0.6, 0.2], &s, 2).unwrap(), 0.5);
        assert_eq!(signed_rank_agreement(&[0.6, 0.2], &s, 2).unwrap(), 1.0);
        assert_eq!(signed_rank_agreement(&[-0.6, -0.2], &s, 2).unwrap(), 0.0);
        let e = [0.3, -0.1, 0.8];
        for n in 0..=3 {
            let expected = if n == 0 { 0.0 } else { 1.0 };
            assert_eq!(all(&e, &e, n)[..4], [expected; 4]);
        }
        assert_eq!(pairwise_rank_agreement(&e, &e).unwrap(), 1.0);
    }

    #[test]
    fn rank_correlation_examples() {
        assert_eq!(rank_correlation(&[3.0, 2.0, 1.0], &[0.9, 0.5, 0.1]).unwrap(), Some(1.0));
        let r: f64 = rank_correlation(&[3.0, 2.0, 1.0], &[0.1, 0.5, 0.9]).unwrap().unwrap();
        assert!((r + 1.0).abs() < 1e-12);
        assert_eq!(rank_correlation(&[0.4, -0.4, 0.4], &[0.1, 0.5, 0.9]).unwrap(), None);
        assert_eq!(rank_correlation(&[0.7, 0.3], &[0.5, 0.5]).unwrap(), None);
    }

    #[test]
    fn pairwise_examples() {
        // ranks (1,2,3) vs (2,1,3)
        let v: f64 = pairwise_rank_agreement(&[0.9, 0.5, 0.1], &[0.5, 0.9, 0.1]).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-12);
        // tie agrees only with tie
        assert_eq!(pairwise_rank_agreement(&[0.5, 0.5], &[0.5, 0.5]).unwrap(), 1.0);
        assert_eq!(pairwise_rank_agreement(&[0.5, 0.5], &[0.6, 0.5]).unwrap(), 0.0);
        assert!(pairwise_rank_agreement(&[0.5], &[0.5]).is_err());
    }

    #[test]
    fn two_feature_identity_off_ties() {
        let s = [0.7, 0.3];
        for e in [[0.6, 0.2], [0.2, 0.6], [-0.9, 0.1], [0.05, -0.4]] {
            let fa1 = feature_agreement(&e, &s, 1).unwrap();
            assert_eq!(fa1, rank_agreement(&e, &s, 2).unwrap());
            assert_eq!(fa1, pairwise_rank_agreement(&e, &s).unwrap());
        }
    }

    #[test]
    fn f32_instantiation() {
        let p = GroundTruthPair::<f32>::new(vec![0.6, 0.2], vec![0.7, 0.3], 2).unwrap();
        assert_eq!(p.fa().unwrap(), 1.0f32);
        assert_eq!(p.sra().unwrap(), 1.0f32);
        assert!(GroundTruthPair::<f32>::new(vec![0.6], vec![0.7], 2).is_err());
    }

    fn vector(len: usize) -> impl Strategy<Value = Vec<f64>> {
        // a small value alphabet so ties and zeros are common
        proptest::collection::vec((-3i32..=3).prop_map(|v| f64::from(v) * 0.25), len)
    }

    fn pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, usize)> {
        (2usize..6).prop_flat_map(|len| (vector(len), vector(len), 0..=len))
    }

    proptest! {
        #[test]
        fn chain_sra_ra_sa_fa((e, s, n) in pair()) {
            let [fa, ra, sa, sra, _] = all(&e, &s, n);
            prop_assert!(sra <= ra.min(sa));
            prop_assert!(ra.max(sa) <= fa);
            for v in [fa, ra, sa, sra] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }

        #[test]
        fn positive_rescaling_invariance((e, s, n) in pair(), c in 0.01f64..100.0, d in 0.01f64..100.0) {
            // powers of two scale without rounding, so ties are preserved
            let c = c.log2().round().exp2();
            let d = d.log2().round().exp2();
            let es: Vec<f64> = e.iter().map(|v| v * c).collect();
            let ss: Vec<f64> = s.iter().map(|v| v * d).collect();
            prop_assert_eq!(all(&e, &s, n), all(&es, &ss, n));
            prop_assert_eq!(rank_correlation(&e, &s).unwrap(), rank_correlation(&es, &ss).unwrap());
        }

        #[test]
        fn rank_correlation_in_range((e, s, _) in pair()) {
            if let Some(r) = rank_correlation(&e, &s).unwrap() {
                prop_assert!((-1.0..=1.0).contains(&r));
            }
        }
    }
}
