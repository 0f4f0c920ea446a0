mod common;

use causticlab::linalg::{CMat, C64};
use causticlab::series::{CanonicalSystem, FormalReduction};
use common::{components, loglog_slope};
use proptest::prelude::*;

const RADII: [f64; 3] = [20.0, 40.0, 80.0];

fn residual_slope(system: &CanonicalSystem, order: usize, arg: f64) -> f64 {
    let fr = FormalReduction::new(system, order).unwrap();
    let res: Vec<f64> = RADII.iter().map(|&r| fr.residual(C64::from_polar(r, arg)).unwrap()).collect();
    loglog_slope(&RADII, &res)
}

#[test]
fn h3_caustic_system_decays_at_order_plus_one() {
    let system = components()[0].frame(1.0).system();
    for order in [4usize, 8] {
        for arg in [0.3, 1.7, -2.4] {
            let slope = residual_slope(&system, order, arg);
            assert!((slope + (order as f64 + 1.0)).abs() < 0.5, "K={order}: slope {slope}");
        }
    }
}

#[test]
fn euler_form_residual_at_fifty() {
    let system = components()[0].frame(1.0).system();
    let fr = FormalReduction::new(&system, 6).unwrap();
    assert!(fr.residual(C64::from_polar(50.0, 0.4)).unwrap() < 1e-9);
}

#[test]
fn all_components_decay_at_low_order() {
    for c in components() {
        let system = c.frame(c.midpoint()).system();
        let slope = residual_slope(&system, 4, 0.3);
        assert!((slope + 5.0).abs() < 0.5, "{}: slope {slope}", c.label());
    }
}

/// u = (a, a, a + g) with V¹₂ = −ir/2, so 2iV¹₂ = r ∈ (0, 1).
fn caustic_type_system(a: C64, g: C64, r: f64, v13: C64, v23: C64) -> CanonicalSystem {
    let v = CMat::from_row_slice(
        3,
        3,
        &[
            C64::new(0.0, 0.0),
            C64::new(0.0, -r / 2.0),
            v13,
            C64::new(0.0, r / 2.0),
            C64::new(0.0, 0.0),
            v23,
            -v13,
            -v23,
            C64::new(0.0, 0.0),
        ],
    );
    CanonicalSystem::new(vec![a, a, a + g], v).unwrap()
}

fn arb_complex(lo: f64, hi: f64) -> impl Strategy<Value = C64> {
    (lo..hi, lo..hi).prop_map(|(a, b)| C64::new(a, b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn residual_slope_is_order_plus_one(
        a in arb_complex(-1.0, 1.0),
        gap in 0.5f64..1.5,
        gap_arg in -3.0f64..3.0,
        r in 0.2f64..0.8,
        v13 in arb_complex(-0.6, 0.6),
        v23 in arb_complex(-0.6, 0.6),
        order in prop::sample::select(vec![4usize, 8]),
        arg in -3.0f64..3.0,
    ) {
        prop_assume!(v13.norm() > 0.1 && v23.norm() > 0.1);
        let system = caustic_type_system(a, C64::from_polar(gap, gap_arg), r, v13, v23);
        let slope = residual_slope(&system, order, arg);
        prop_assert!((slope + (order as f64 + 1.0)).abs() < 0.5, "K={} slope {}", order, slope);
    }
}
