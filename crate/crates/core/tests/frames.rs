mod common;

use causticlab::caustic::{
    classify_point, connection_identities_check, default_approach_samples, hertling_m, m_from_approach, ClassifyConfig,
    FrameConfig, PointClass,
};
use causticlab::linalg::{max_abs, C64};
use common::components;
use proptest::prelude::*;

fn pt(y: f64, z: f64) -> Vec<C64> {
    vec![C64::new(0.0, 0.0), C64::new(y, 0.0), C64::new(z, 0.0)]
}

#[test]
fn hertling_invariants_at_three_samples() {
    for c in components() {
        let (a, b) = c.curve.s_range;
        for s in [a, 0.5 * (a + b), b] {
            let f = c.frame(s);
            assert!((f.m - c.m).abs() < 1e-8, "{} s={s}: m = {}", c.label(), f.m);
            assert!(hertling_m(&f.v, 1e-8).unwrap().near_integer);
        }
    }
}

#[test]
fn v12_magnitude_on_h3_cubic() {
    let c = &components()[0];
    for s in [0.8, 1.0, 1.2] {
        let f = c.frame(s);
        assert!((f.v12_abs - 0.3).abs() < 1e-10);
        assert!(f.v12().re.abs() < 1e-10);
    }
}

#[test]
fn h3_unit_parameter_values() {
    let f = components()[0].frame(1.0);
    let u = [-0.7, -0.7, 2.5];
    for (k, expected) in u.iter().enumerate() {
        assert!((f.u[k] - C64::new(*expected, 0.0)).norm() < 1e-10);
    }
    let n = &f.normal;
    assert!((n[0] + 3.0).norm() < 1e-9 && (n[1] - 1.0).norm() < 1e-9 && n[2].norm() < 1e-9);
}

#[test]
fn approach_slope_recovers_m() {
    for c in components() {
        let s = c.midpoint();
        let f = c.frame(s);
        let fit =
            m_from_approach(&c.manifold, &c.curve.point(s).unwrap(), &f.normal, &default_approach_samples()).unwrap();
        assert!((fit.m_estimate - c.m).abs() < 0.05 * c.m, "{}: {}", c.label(), fit.m_estimate);
    }
}

#[test]
fn classification_controls() {
    let h3 = common::manifold("h3");
    let cfg = ClassifyConfig::default();
    assert_eq!(classify_point(&h3, &pt(0.0, 1.0), &cfg).unwrap(), PointClass::SemisimpleCoalescent);
    assert_eq!(classify_point(&h3, &pt(1.0, 1.0), &cfg).unwrap(), PointClass::Caustic);
    assert_eq!(classify_point(&h3, &pt(0.3, 1.0), &cfg).unwrap(), PointClass::Semisimple);
}

#[test]
fn connection_identities_along_h3_cubic() {
    let c = &components()[0];
    let r = connection_identities_check(&c.manifold, &c.curve, &[0.8, 1.0, 1.2], 1e-4, 1e-5, &FrameConfig::default())
        .unwrap();
    assert!(r.passed, "{r:?}");
    assert!(r.v12_spread < 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn frame_invariants_along_components(k in 0usize..5, t in 0.0f64..1.0) {
        let c = &components()[k];
        let (a, b) = c.curve.s_range;
        let f = c.frame(a + t * (b - a));
        prop_assert!(f.diagnostics.orthonormality < 1e-9);
        prop_assert!(f.diagnostics.u_offdiag < 1e-9);
        prop_assert!((f.u[0] - f.u[1]).norm() < 1e-9 * f.u.iter().fold(1.0_f64, |m, z| m.max(z.norm())));
        prop_assert!(max_abs(&(&f.v + f.v.transpose())) < 1e-10);
        let r = C64::new(0.0, 2.0) * f.v12();
        prop_assert!(r.im.abs() < 1e-10 && r.re > 0.0 && r.re < 1.0, "2iV12 = {r}");
        prop_assert!((f.m - c.m).abs() < 1e-8);
    }
}
