//! Built-in manifolds: the three-dimensional A₃, B₃, H₃ potentials, a trivial two-dimensional
//! one with μ = 0, corrupted potentials for negative controls, and their caustic curves.

use num_rational::Rational64;

use crate::frobenius::ManifoldSpec;
use crate::isocheck::CausticCurve;
use crate::linalg::{c, real, C64};
use crate::poly::MultiPoly;

fn q(n: i64, d: i64) -> Rational64 {
    Rational64::new(n, d)
}

fn potential(n: usize, terms: &[([u32; 3], f64)]) -> MultiPoly {
    MultiPoly::from_terms(n, terms.iter().map(|(e, k)| (e[..n].to_vec(), real(*k)))).expect("fixture arity")
}

fn xyz() -> Vec<String> {
    vec!["x".into(), "y".into(), "z".into()]
}

fn three_dim(terms: &[([u32; 3], f64)], weights: [Rational64; 3], charge: Rational64) -> ManifoldSpec {
    ManifoldSpec::new(xyz(), potential(3, terms), weights.to_vec(), vec![real(0.0); 3], charge, 0)
        .expect("fixture is well formed")
}

const FLAT_PART: [([u32; 3], f64); 2] = [([2, 0, 1], 0.5), ([1, 2, 0], 0.5)];

/// F = x²z/2 + xy²/2 − y²z²/16 + z⁵/960
pub fn a3() -> ManifoldSpec {
    let mut t = FLAT_PART.to_vec();
    t.extend([([0, 2, 2], -1.0 / 16.0), ([0, 0, 5], 1.0 / 960.0)]);
    three_dim(&t, [q(1, 1), q(3, 4), q(1, 2)], q(1, 2))
}

/// F = x²z/2 + xy²/2 + y³z/6 + y²z³/6 + z⁷/210
pub fn b3() -> ManifoldSpec {
    let mut t = FLAT_PART.to_vec();
    t.extend([([0, 3, 1], 1.0 / 6.0), ([0, 2, 3], 1.0 / 6.0), ([0, 0, 7], 1.0 / 210.0)]);
    three_dim(&t, [q(1, 1), q(2, 3), q(1, 3)], q(2, 3))
}

/// F = x²z/2 + xy²/2 + y³z²/6 + y²z⁵/20 + z¹¹/3960
pub fn h3() -> ManifoldSpec {
    let mut t = FLAT_PART.to_vec();
    t.extend([([0, 3, 2], 1.0 / 6.0), ([0, 2, 5], 1.0 / 20.0), ([0, 0, 11], 1.0 / 3960.0)]);
    three_dim(&t, [q(1, 1), q(3, 5), q(1, 5)], q(4, 5))
}

/// F = x²y/2 + y³ with E = x∂ₓ + y∂_y and d = 0, so μ = 0.
pub fn v0() -> ManifoldSpec {
    let p = MultiPoly::from_terms(2, [(vec![2, 1], real(0.5)), (vec![0, 3], real(1.0))]).expect("arity");
    ManifoldSpec::new(vec!["x".into(), "y".into()], p, vec![q(1, 1), q(1, 1)], vec![real(0.0); 2], q(0, 1), 0)
        .expect("fixture is well formed")
}

/// x²z/2 + xy²/2 + y⁵ with the H₃ weights: associative but not quasi-homogeneous.
pub fn corrupted_quintic() -> ManifoldSpec {
    let mut t = FLAT_PART.to_vec();
    t.push(([0, 5, 0], 1.0));
    three_dim(&t, [q(1, 1), q(3, 5), q(1, 5)], q(4, 5))
}

/// H₃ plus y²z², which breaks associativity.
pub fn corrupted_nonassociative() -> ManifoldSpec {
    let mut spec = h3();
    let extra = MultiPoly::monomial(3, vec![0, 2, 2], real(1.0)).expect("arity");
    spec.potential = spec.potential.add(&extra).expect("arity");
    spec
}

fn s_poly(terms: &[(u32, C64)]) -> MultiPoly {
    MultiPoly::from_terms(1, terms.iter().map(|(k, v)| (vec![*k], *v))).expect("arity")
}

/// Curve (0, y(s), z(s)) with tangent vectors e = ∂ₓ and the velocity.
fn yz_curve_general(name: &str, y: MultiPoly, z: MultiPoly, s_range: (f64, f64)) -> CausticCurve {
    let zero = MultiPoly::zero(1);
    let one = MultiPoly::constant(1, real(1.0));
    let dy = y.partial(0).expect("one variable");
    let dz = z.partial(0).expect("one variable");
    let param = vec![zero.clone(), y, z];
    let tangent = vec![vec![one, zero.clone(), zero.clone()], vec![zero, dy, dz]];
    CausticCurve::new(name, param, tangent, s_range).expect("fixture curve is well formed")
}

/// Curve (0, y(s), s).
fn yz_curve(name: &str, y: MultiPoly, s_range: (f64, f64)) -> CausticCurve {
    yz_curve_general(name, y, s_poly(&[(1, real(1.0))]), s_range)
}

pub fn h3_curves() -> Vec<CausticCurve> {
    vec![
        yz_curve("y-eq-z3", s_poly(&[(3, real(1.0))]), (0.8, 1.2)),
        yz_curve("27y+5z3", s_poly(&[(3, real(-5.0 / 27.0))]), (1.6, 2.4)),
    ]
}

pub fn b3_curves() -> Vec<CausticCurve> {
    vec![
        yz_curve("2y-3z2", s_poly(&[(2, real(1.5))]), (0.8, 1.2)),
        yz_curve("2y+z2", s_poly(&[(2, real(-0.5))]), (0.8, 1.2)),
    ]
}

/// The A₃ caustic 27y² + 8z³ = 0 as (0, i√(8/27)·s³, s²).
pub fn a3_curves() -> Vec<CausticCurve> {
    vec![yz_curve_general(
        "27y2+8z3",
        s_poly(&[(3, c(0.0, (8.0_f64 / 27.0).sqrt()))]),
        s_poly(&[(2, real(1.0))]),
        (0.8, 1.2),
    )]
}

/// Spec and curves of a built-in fixture by name.
pub fn builtin(name: &str) -> Option<(ManifoldSpec, Vec<CausticCurve>)> {
    match name {
        "a3" => Some((a3(), a3_curves())),
        "b3" => Some((b3(), b3_curves())),
        "h3" => Some((h3(), h3_curves())),
        "v0" => Some((v0(), Vec::new())),
        "corrupted" => Some((corrupted_nonassociative(), Vec::new())),
        "corrupted-quintic" => Some((corrupted_quintic(), Vec::new())),
        _ => None,
    }
}

pub const BUILTIN_NAMES: [&str; 6] = ["a3", "b3", "h3", "v0", "corrupted", "corrupted-quintic"];
