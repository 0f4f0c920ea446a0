mod common;

use std::f64::consts::PI;

use causticlab::isocheck::flat_levelt_t0;
use causticlab::linalg::{identity, max_abs, spectrum_distance, CMat, C64};
use causticlab::monodromy::{compute_monodromy, exp_2pi_i, MonodromyConfig, MonodromyData};
use causticlab::series::CanonicalSystem;
use common::{components, Component};

fn data_at(c: &Component, s: f64) -> MonodromyData {
    let f = c.frame(s);
    let cfg = MonodromyConfig { levelt_t0: Some(flat_levelt_t0(&c.manifold, &f)), ..Default::default() };
    compute_monodromy(&f.system(), &cfg).unwrap()
}

fn roots(angles: &[f64]) -> Vec<C64> {
    angles.iter().map(|a| C64::from_polar(1.0, *a)).collect()
}

#[test]
fn h3_formal_exponent_and_spectrum() {
    let d = data_at(&components()[0], 1.0);
    let b = [0.3, -0.3, 0.0];
    for (k, x) in b.iter().enumerate() {
        assert!((d.b_exp[k] - C64::new(*x, 0.0)).norm() < 1e-10);
    }
    let spec = d.monodromy_spectrum().unwrap();
    assert!(spectrum_distance(&spec, &roots(&[0.0, 0.8 * PI, -0.8 * PI])) < 1e-8);
    assert!(d.diagnostics.levelt_loop < 1e-8);
}

#[test]
fn loop_matrix_agrees_with_levelt_exponent() {
    let d = data_at(&components()[0], 1.0);
    let n = d.levelt.dim();
    let mut rs = CMat::from_diagonal(&causticlab::linalg::CVec::from_vec(d.levelt.s.clone()));
    for r in &d.levelt.r_k {
        rs += r;
    }
    let predicted = exp_2pi_i(&rs);
    assert!(max_abs(&(&d.monodromy_zero - &predicted)) < 1e-8);
    assert_eq!(predicted.nrows(), n);
}

#[test]
fn spectra_match_grading_on_every_component() {
    for c in components() {
        let d = data_at(&c, c.midpoint());
        let mu: Vec<f64> = c.manifold.mu().diagonal().iter().map(|z| z.re).collect();
        let expected = roots(&mu.iter().map(|x| 2.0 * PI * x).collect::<Vec<_>>());
        let spec = d.monodromy_spectrum().unwrap();
        assert!(spectrum_distance(&spec, &expected) < 1e-8, "{}", c.label());
    }
}

#[test]
fn structural_diagnostics() {
    for c in components() {
        let d = data_at(&c, c.midpoint());
        let g = &d.diagnostics;
        assert!(g.liouville < 1e-8, "{}: {}", c.label(), g.liouville);
        assert!(g.canonical_det < 1e-8, "{}: {}", c.label(), g.canonical_det);
        assert!(g.stokes_pattern < 1e-6, "{}: {}", c.label(), g.stokes_pattern);
        assert!(g.stokes_consistency < 1e-6);
        for st in &d.stokes {
            assert!(st.det_deviation < 1e-6);
        }
    }
}

#[test]
fn vanishing_v_gives_identity_stokes() {
    let u = vec![C64::new(-1.0, 0.0), C64::new(0.5, 0.2), C64::new(1.5, -0.4)];
    let system = CanonicalSystem::new(u, CMat::zeros(3, 3)).unwrap();
    let d = compute_monodromy(&system, &MonodromyConfig::default()).unwrap();
    for st in &d.stokes {
        assert!(max_abs(&(&st.matrix - identity(3))) < 1e-8);
    }
}

#[test]
fn json_round_trip() {
    let d = data_at(&components()[2], 1.0);
    let text = serde_json::to_string(&d).unwrap();
    let back: MonodromyData = serde_json::from_str(&text).unwrap();
    assert_eq!(back, d);
}
