use axebench::axe::{axe_quality, AxeConfig};
use axebench::experiments::{principle_matrix, Fixtures, ManifoldPatched, Outcome};
use axebench::metrics::{pgi_report, MetricKind, PerturbConfig};
use axebench::predict_rows;
use axebench::rng::rng_for;
use axebench::Predictor;
use rand::Rng;
use rand_distr::StandardNormal;

#[test]
fn matrix_marks_and_witnesses() {
    use Outcome::{Fail, Pass};
    for r in principle_matrix(0).unwrap() {
        let want = match r.metric {
            MetricKind::Axe => [Pass, Pass, Pass],
            MetricKind::Pgi | MetricKind::Pgu => [Pass, Pass, Fail],
            _ => [Fail, Fail, Pass],
        };
        assert_eq!(r.marks(), want, "{}", r.metric);
        for w in [&r.p1, &r.p2, &r.p3] {
            assert!(!w.fixture.is_empty());
            assert!(w.evidence.is_object());
        }
    }
}

#[test]
fn p3_witness_axe_equal_pgi_unequal() {
    let fx = Fixtures::new(0).unwrap();
    let patched = ManifoldPatched::new(fx.model_a.clone(), &fx.data);
    assert_eq!(predict_rows(&patched, &fx.data), predict_rows(&fx.model_a, &fx.data));

    // the two models part ways on Gaussian-perturbed copies of the rows
    let mut rng = rng_for(1, "p3-probe", 0);
    let differing = (0..fx.data.n_rows())
        .filter(|&i| {
            let z: Vec<f64> = fx.data.row(i).iter().map(|v| v + 0.5 * rng.sample::<f64, _>(StandardNormal)).collect();
            patched.predict(&z) != fx.model_a.predict(&z)
        })
        .count();
    assert!(differing > fx.data.n_rows() / 2);

    let cfg = AxeConfig::default();
    let a = axe_quality(&fx.data, &predict_rows(&fx.model_a, &fx.data), &fx.explanations, &cfg).unwrap();
    let b = axe_quality(&fx.data, &predict_rows(&patched, &fx.data), &fx.explanations, &cfg).unwrap();
    assert_eq!(a.per_point_q, b.per_point_q);
    assert_eq!(a.aggregate_q, b.aggregate_q);

    let p = PerturbConfig::default();
    let ga = pgi_report(&fx.model_a, &fx.data, &fx.explanations, &p).unwrap();
    let gb = pgi_report(&patched, &fx.data, &fx.explanations, &p).unwrap();
    assert_ne!(ga.aggregate_q, gb.aggregate_q);
}
