mod common;

use causticlab::caustic::FrameConfig;
use causticlab::isocheck::{isocheck, CausticCurve, IsocheckConfig};
use causticlab::poly::MultiPoly;
use causticlab::Error;
use common::components;

#[test]
fn monodromy_data_constant_on_every_component() {
    for c in components() {
        let r = isocheck(&c.manifold, &c.curve, &IsocheckConfig::default(), &FrameConfig::default()).unwrap();
        let d = &r.deviations;
        assert!(r.passed, "{}: {d:?}", c.label());
        assert_eq!(r.samples.len(), 5);
        assert!(d.b_exp < 1e-10 && d.m < 1e-10);
        assert!(d.stokes < 1e-6 && d.connection < 1e-6);
        assert!(d.spectrum < 1e-8);
        for s in &r.samples {
            assert!((s.m - c.m).abs() < 1e-8);
        }
    }
}

#[test]
fn report_round_trips_through_json() {
    let c = &components()[1];
    let cfg = IsocheckConfig { samples: 3, ..Default::default() };
    let r = isocheck(&c.manifold, &c.curve, &cfg, &FrameConfig::default()).unwrap();
    let back = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
    assert_eq!(r, back);
}

#[test]
fn range_through_origin_names_the_sample() {
    let c = &components()[0];
    let curve =
        CausticCurve::new("through-origin", c.curve.param.clone(), c.curve.tangent.clone(), (-0.2, 0.2)).unwrap();
    let err = isocheck(&c.manifold, &curve, &IsocheckConfig::default(), &FrameConfig::default()).unwrap_err();
    assert_eq!(err.sample(), Some(0.0));
    assert!(err.is_degeneracy());
    assert!(matches!(err.root(), Error::ClusterStructure(_)));
}

#[test]
fn wrong_arity_curve_is_rejected() {
    let bivariate = MultiPoly::constant(2, causticlab::linalg::real(1.0));
    assert!(CausticCurve::new("bivariate", vec![bivariate; 3], Vec::new(), (0.0, 1.0)).is_err());
    let c = &components()[0];
    assert!(isocheck(
        &c.manifold,
        &CausticCurve::new("short", vec![MultiPoly::zero(1); 2], Vec::new(), (0.5, 1.0)).unwrap(),
        &IsocheckConfig::default(),
        &FrameConfig::default()
    )
    .is_err());
}
