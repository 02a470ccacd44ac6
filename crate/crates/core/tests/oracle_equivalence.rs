mod oracle;

use axebench::metrics::{feature_agreement, pairwise_rank_agreement, rank_agreement, rank_correlation, sign_agreement, signed_rank_agreement};
use proptest::prelude::*;

#[test]
fn two_hundred_random_instances_match_the_oracles() {
    let failures: Vec<String> = (0..200u64).filter_map(|s| oracle::check_instance(s).err()).collect();
    assert!(failures.is_empty(), "{} mismatches, first: {}", failures.len(), failures[0]);
}

/// Every explanation pair over a small value alphabet, N ≤ 3, every n.
#[test]
fn exhaustive_ground_truth_pairs_small_alphabet() {
    let alphabet = [-1.0, -0.5, 0.0, 0.5, 1.0];
    for big_n in 1..=3usize {
        let total = alphabet.len().pow(big_n as u32);
        let vec_at = |mut c: usize| -> Vec<f64> {
            (0..big_n)
                .map(|_| {
                    let v = alphabet[c % alphabet.len()];
                    c /= alphabet.len();
                    v
                })
                .collect()
        };
        for a in 0..total {
            for b in 0..total {
                let (e, s) = (vec_at(a), vec_at(b));
                for n in 0..=big_n {
                    assert_eq!(feature_agreement(&e, &s, n).unwrap(), oracle::fa(&e, &s, n), "{e:?} {s:?} {n}");
                    assert_eq!(rank_agreement(&e, &s, n).unwrap(), oracle::ra(&e, &s, n));
                    assert_eq!(sign_agreement(&e, &s, n).unwrap(), oracle::sa(&e, &s, n));
                    assert_eq!(signed_rank_agreement(&e, &s, n).unwrap(), oracle::sra(&e, &s, n));
                }
                let got = rank_correlation(&e, &s).unwrap();
                let want = oracle::rc(&e, &s);
                assert_eq!(got.is_some(), want.is_some(), "{e:?} {s:?}");
                if let (Some(g), Some(w)) = (got, want) {
                    assert!((g - w).abs() <= 1e-12);
                }
                assert_eq!(pairwise_rank_agreement(&e, &s).ok(), oracle::pra(&e, &s));
            }
        }
    }
}

fn distinct_magnitudes(n: usize) -> impl Strategy<Value = Vec<f64>> {
    // magnitudes are a shuffled 1..=n scale with random signs, so no ties
    (Just((1..=n).map(|v| v as f64).collect::<Vec<f64>>()).prop_shuffle(), prop::collection::vec(any::<bool>(), n))
        .prop_map(|(mags, signs)| mags.iter().zip(signs).map(|(m, s)| if s { *m } else { -*m }).collect())
}

proptest! {
    /// Relabelling features in both explanations leaves every ground-truth
    /// metric unchanged when magnitudes are distinct.
    #[test]
    fn metrics_are_permutation_invariant(
        (e, s, perm, n) in (2usize..7).prop_flat_map(|len| (
            distinct_magnitudes(len),
            distinct_magnitudes(len),
            Just((0..len).collect::<Vec<usize>>()).prop_shuffle(),
            0..=len,
        ))
    ) {
        let pe: Vec<f64> = perm.iter().map(|&p| e[p]).collect();
        let ps: Vec<f64> = perm.iter().map(|&p| s[p]).collect();
        prop_assert_eq!(feature_agreement(&e, &s, n).unwrap(), feature_agreement(&pe, &ps, n).unwrap());
        prop_assert_eq!(rank_agreement(&e, &s, n).unwrap(), rank_agreement(&pe, &ps, n).unwrap());
        prop_assert_eq!(sign_agreement(&e, &s, n).unwrap(), sign_agreement(&pe, &ps, n).unwrap());
        prop_assert_eq!(signed_rank_agreement(&e, &s, n).unwrap(), signed_rank_agreement(&pe, &ps, n).unwrap());
        prop_assert_eq!(pairwise_rank_agreement(&e, &s).unwrap(), pairwise_rank_agreement(&pe, &ps).unwrap());
        let (a, b) = (rank_correlation(&e, &s).unwrap().unwrap(), rank_correlation(&pe, &ps).unwrap().unwrap());
        prop_assert!((a - b).abs() < 1e-12);
    }

    /// An explanation compared with itself scores perfectly.
    #[test]
    fn self_agreement_is_perfect(e in (1usize..7).prop_flat_map(distinct_magnitudes), n_frac in 0.0f64..=1.0) {
        let n = ((e.len() as f64) * n_frac).round() as usize;
        let full = if n == 0 { 0.0 } else { 1.0 };
        prop_assert_eq!(feature_agreement(&e, &e, n).unwrap(), full);
        prop_assert_eq!(signed_rank_agreement(&e, &e, n).unwrap(), full);
        if e.len() >= 2 {
            prop_assert_eq!(pairwise_rank_agreement(&e, &e).unwrap(), 1.0);
            prop_assert!((rank_correlation(&e, &e).unwrap().unwrap() - 1.0).abs() < 1e-12);
        }
    }
}
