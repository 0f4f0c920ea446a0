mod common;

use causticlab::fixtures;
use causticlab::frobenius::{metric, mu_diagonal, mu_matrix, random_points};
use causticlab::linalg::{eigenvalues, identity, max_abs, spectrum_distance, CVec, C64};
use causticlab::FrobeniusManifold;
use num_rational::Rational64;
use proptest::prelude::*;

const VALID: [&str; 4] = ["a3", "b3", "h3", "v0"];

fn q(n: i64, d: i64) -> Rational64 {
    Rational64::new(n, d)
}

#[test]
fn fixtures_pass_at_twenty_seeded_points() {
    for name in VALID {
        let m = common::manifold(name);
        let points = random_points(m.dim(), 20, 7);
        let report = m.verify_axioms(&points, 1e-10).unwrap();
        assert!(report.passed, "{name}: {:?}", report.max);
        assert!(report.max.associativity < 1e-10);
        assert!(report.max.compatibility < 1e-10);
        assert!(report.max.quasi_homogeneity < 1e-10);
        assert!(report.metric_constant && report.unit_form_closed);
    }
}

#[test]
fn h3_associative_at_caustic_point() {
    let m = common::manifold("h3");
    let p = vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0)];
    let report = m.verify_axioms(&[p], 1e-10).unwrap();
    assert!(report.max.associativity < 1e-10);
}

#[test]
fn grading_operators_are_exact() {
    assert_eq!(mu_diagonal(&fixtures::h3()), vec![q(-2, 5), q(0, 1), q(2, 5)]);
    assert_eq!(mu_diagonal(&fixtures::b3()), vec![q(-1, 3), q(0, 1), q(1, 3)]);
    assert_eq!(mu_diagonal(&fixtures::a3()), vec![q(-1, 4), q(0, 1), q(1, 4)]);
    assert_eq!(mu_diagonal(&fixtures::v0()), vec![q(0, 1), q(0, 1)]);
    assert_eq!(max_abs(&mu_matrix(&fixtures::v0()).unwrap()), 0.0);
}

#[test]
fn metrics_are_antidiagonal_ones() {
    for spec in [fixtures::a3(), fixtures::b3(), fixtures::h3()] {
        let eta = metric(&spec).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i + j == 2 { 1.0 } else { 0.0 };
                assert_eq!(eta[(i, j)], C64::new(expected, 0.0));
            }
        }
    }
}

#[test]
fn negative_controls_fail() {
    let points = random_points(3, 20, 7);
    let bad = FrobeniusManifold::new(fixtures::corrupted_nonassociative()).unwrap();
    let r = bad.verify_axioms(&points, 1e-10).unwrap();
    assert!(!r.passed);
    assert!(r.max.associativity > 1e-3);

    let quintic = FrobeniusManifold::new(fixtures::corrupted_quintic()).unwrap();
    let r = quintic.verify_axioms(&points, 1e-10).unwrap();
    assert!(!r.passed);
    assert!(r.max.quasi_homogeneity > 1e-3);
}

fn arb_point() -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 3)
        .prop_map(|v| v.into_iter().map(|(a, b)| C64::new(a, b)).collect())
}

fn arb_fixture() -> impl Strategy<Value = &'static str> {
    prop::sample::select(vec!["a3", "b3", "h3"])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn associativity_everywhere(name in arb_fixture(), p in arb_point()) {
        let m = common::manifold(name);
        let r = m.verify_axioms(&[p], 1e-10).unwrap();
        prop_assert!(r.max.associativity < 1e-10, "{}", r.max.associativity);
    }

    #[test]
    fn unit_multiplication_is_identity(name in arb_fixture(), p in arb_point()) {
        let m = common::manifold(name);
        let e = m.mult_matrix(&p, &m.unit()).unwrap();
        prop_assert!(max_abs(&(e - identity(3))) < 1e-14);
    }

    #[test]
    fn euler_multiplication_is_metric_symmetric(name in arb_fixture(), p in arb_point()) {
        let m = common::manifold(name);
        let u = m.euler_mult(&p).unwrap();
        let eta = m.eta();
        prop_assert!(max_abs(&(eta * &u - u.transpose() * eta)) < 1e-10);
    }

    #[test]
    fn grading_is_metric_antisymmetric(name in arb_fixture()) {
        let m = common::manifold(name);
        let em = m.eta() * m.mu();
        prop_assert!(max_abs(&(&em + em.transpose())) < 1e-12);
    }

    #[test]
    fn canonical_coordinates_scale(name in arb_fixture(), p in arb_point(), lambda in 0.3f64..3.0) {
        let m = common::manifold(name);
        let base = eigenvalues(&m.euler_mult(&p).unwrap()).unwrap();
        let flowed = eigenvalues(&m.euler_mult(&m.euler_flow(&p, lambda)).unwrap()).unwrap();
        let predicted: Vec<C64> = base.iter().map(|u| u * lambda).collect();
        let scale = predicted.iter().fold(1.0_f64, |a, z| a.max(z.norm()));
        prop_assert!(spectrum_distance(&flowed, &predicted) < 1e-8 * scale);
    }

    #[test]
    fn product_is_commutative(name in arb_fixture(), p in arb_point(), a in arb_point(), b in arb_point()) {
        let alg = common::manifold(name).at(&p).unwrap();
        let (a, b) = (CVec::from_vec(a), CVec::from_vec(b));
        prop_assert!((alg.product(&a, &b) - alg.product(&b, &a)).norm() < 1e-10);
    }
}
