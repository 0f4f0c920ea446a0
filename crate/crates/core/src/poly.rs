//! Sparse multivariate polynomials with complex coefficients.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::C64;

/// Coefficients below this magnitude are dropped on normalization.
const ZERO_CUTOFF: f64 = 1e-300;

/// One monomial in the serialized form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub exponents: Vec<u32>,
    pub coeff: C64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultiPoly {
    num_vars: usize,
    terms: BTreeMap<Vec<u32>, C64>,
}

impl MultiPoly {
    pub fn zero(num_vars: usize) -> Self {
        MultiPoly { num_vars, terms: BTreeMap::new() }
    }

    pub fn constant(num_vars: usize, value: C64) -> Self {
        Self::monomial(num_vars, vec![0; num_vars], value).expect("arity is consistent")
    }

    pub fn monomial(num_vars: usize, exponents: Vec<u32>, coeff: C64) -> Result<Self> {
        Self::from_terms(num_vars, [(exponents, coeff)])
    }

    /// The coordinate function t_i.
    pub fn var(num_vars: usize, i: usize) -> Result<Self> {
        if i >= num_vars {
            return Err(Error::IndexOutOfRange { index: i, len: num_vars });
        }
        let mut e = vec![0; num_vars];
        e[i] = 1;
        Self::monomial(num_vars, e, C64::new(1.0, 0.0))
    }

    /// Builds a polynomial, summing repeated exponent vectors.
    pub fn from_terms<I>(num_vars: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, C64)>,
    {
        let mut p = MultiPoly::zero(num_vars);
        for (e, c) in terms {
            if e.len() != num_vars {
                return Err(Error::ArityMismatch { expected: num_vars, found: e.len() });
            }
            *p.terms.entry(e).or_insert(C64::new(0.0, 0.0)) += c;
        }
        p.normalize();
        Ok(p)
    }

    fn normalize(&mut self) {
        self.terms.retain(|_, c| c.norm() >= ZERO_CUTOFF);
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in lexicographic exponent order.
    pub fn terms(&self) -> impl Iterator<Item = (&[u32], C64)> {
        self.terms.iter().map(|(e, c)| (e.as_slice(), *c))
    }

    pub fn to_terms(&self) -> Vec<Term> {
        self.terms().map(|(e, c)| Term { exponents: e.to_vec(), coeff: c }).collect()
    }

    pub fn coeff(&self, exponents: &[u32]) -> C64 {
        self.terms.get(exponents).copied().unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn constant_term(&self) -> C64 {
        self.coeff(&vec![0; self.num_vars])
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }

    pub fn is_constant(&self) -> bool {
        self.degree().is_none_or(|d| d == 0)
    }

    fn check_arity(&self, other: &MultiPoly) -> Result<()> {
        if self.num_vars != other.num_vars {
            return Err(Error::ArityMismatch { expected: self.num_vars, found: other.num_vars });
        }
        Ok(())
    }

    pub fn add(&self, other: &MultiPoly) -> Result<MultiPoly> {
        self.check_arity(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            *out.terms.entry(e.clone()).or_insert(C64::new(0.0, 0.0)) += c;
        }
        out.normalize();
        Ok(out)
    }

    pub fn sub(&self, other: &MultiPoly) -> Result<MultiPoly> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, factor: C64) -> MultiPoly {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c *= factor;
        }
        out.normalize();
        out
    }

    pub fn mul(&self, other: &MultiPoly) -> Result<MultiPoly> {
        self.check_arity(other)?;
        let mut out = MultiPoly::zero(self.num_vars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                *out.terms.entry(e).or_insert(C64::new(0.0, 0.0)) += ca * cb;
            }
        }
        out.normalize();
        Ok(out)
    }

    pub fn pow(&self, k: u32) -> Result<MultiPoly> {
        let mut out = MultiPoly::constant(self.num_vars, C64::new(1.0, 0.0));
        for _ in 0..k {
            out = out.mul(self)?;
        }
        Ok(out)
    }

    pub fn partial(&self, i: usize) -> Result<MultiPoly> {
        if i >= self.num_vars {
            return Err(Error::IndexOutOfRange { index: i, len: self.num_vars });
        }
        let mut out = MultiPoly::zero(self.num_vars);
        for (e, c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut d = e.clone();
            d[i] -= 1;
            *out.terms.entry(d).or_insert(C64::new(0.0, 0.0)) += c * f64::from(e[i]);
        }
        out.normalize();
        Ok(out)
    }

    /// Direct monomial summation in lexicographic term order.
    pub fn eval(&self, p: &[C64]) -> Result<C64> {
        if p.len() != self.num_vars {
            return Err(Error::ArityMismatch { expected: self.num_vars, found: p.len() });
        }
        let mut acc = C64::new(0.0, 0.0);
        for (e, c) in &self.terms {
            let mut m = *c;
            for (x, &k) in p.iter().zip(e) {
                if k > 0 {
                    m *= x.powu(k);
                }
            }
            acc += m;
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, real};
    use proptest::prelude::*;

    fn x3(i: usize) -> MultiPoly {
        MultiPoly::var(3, i).unwrap()
    }

    #[test]
    fn cancellation_gives_zero() {
        let x2 = x3(0).mul(&x3(0)).unwrap();
        assert!(x2.sub(&x2).unwrap().is_zero());
        assert!(x2.add(&x2.scale(real(-1.0))).unwrap().is_zero());
    }

    #[test]
    fn doubling_and_identity() {
        let xy = x3(0).mul(&x3(1)).unwrap();
        let two = xy.add(&xy).unwrap();
        assert_eq!(two.coeff(&[1, 1, 0]), real(2.0));
        assert_eq!(two.len(), 1);
        assert_eq!(xy.add(&MultiPoly::zero(3)).unwrap(), xy);
    }

    #[test]
    fn products() {
        let (x, y, z) = (x3(0), x3(1), x3(2));
        let lhs = x.add(&y).unwrap().mul(&x.sub(&y).unwrap()).unwrap();
        let rhs = x.pow(2).unwrap().sub(&y.pow(2).unwrap()).unwrap();
        assert_eq!(lhs, rhs);
        assert_eq!(z.pow(3).unwrap().mul(&z.pow(3).unwrap()).unwrap(), z.pow(6).unwrap());
    }

    #[test]
    fn arity_is_checked() {
        let a = MultiPoly::var(2, 0).unwrap();
        assert!(matches!(a.add(&x3(0)), Err(Error::ArityMismatch { .. })));
        assert!(matches!(a.mul(&x3(0)), Err(Error::ArityMismatch { .. })));
        assert!(matches!(a.eval(&[real(1.0)]), Err(Error::ArityMismatch { .. })));
        assert!(matches!(a.partial(2), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn partial_of_quintic_term() {
        let t = MultiPoly::monomial(3, vec![0, 0, 5], real(1.0 / 960.0)).unwrap();
        let d = t.partial(2).unwrap();
        assert!((d.coeff(&[0, 0, 4]) - real(1.0 / 192.0)).norm() < 1e-18);
        let y2 = x3(1).pow(2).unwrap();
        assert!(y2.partial(0).unwrap().is_zero());
    }

    #[test]
    fn third_derivative_of_xy2_term() {
        let t = MultiPoly::monomial(3, vec![1, 2, 0], real(0.5)).unwrap();
        let d = t.partial(0).unwrap().partial(1).unwrap().partial(1).unwrap();
        assert!(d.is_constant());
        assert_eq!(d.constant_term(), real(1.0));
    }

    #[test]
    fn evaluation() {
        let p = x3(0).pow(2).unwrap().add(&x3(1)).unwrap();
        assert_eq!(p.eval(&[real(2.0), real(3.0), real(0.0)]).unwrap(), real(7.0));
        assert_eq!(MultiPoly::zero(3).eval(&[real(5.0); 3]).unwrap(), real(0.0));
    }

    #[test]
    fn discriminant_factor_vanishes_on_component() {
        // y²(y − z³)⁵(27y + 5z³)³ in variables (y, z)
        let y = MultiPoly::var(2, 0).unwrap();
        let z = MultiPoly::var(2, 1).unwrap();
        let z3 = z.pow(3).unwrap();
        let f = y
            .pow(2)
            .unwrap()
            .mul(&y.sub(&z3).unwrap().pow(5).unwrap())
            .unwrap()
            .mul(&y.scale(real(27.0)).add(&z3.scale(real(5.0))).unwrap().pow(3).unwrap())
            .unwrap();
        assert!(f.eval(&[real(1.0), real(1.0)]).unwrap().norm() < 1e-9);
        assert!(f.eval(&[real(2.0), real(1.0)]).unwrap().norm() > 1.0);
    }

    fn arb_poly() -> impl Strategy<Value = MultiPoly> {
        prop::collection::vec((prop::collection::vec(0u32..4, 3), -3i32..4, -3i32..4), 0..6).prop_map(|ts| {
            MultiPoly::from_terms(3, ts.into_iter().map(|(e, re, im)| (e, c(f64::from(re), f64::from(im))))).unwrap()
        })
    }

    fn arb_point() -> impl Strategy<Value = Vec<C64>> {
        prop::collection::vec((-1.5f64..1.5, -1.5f64..1.5).prop_map(|(a, b)| c(a, b)), 3)
    }

    proptest! {
        #[test]
        fn partials_commute(f in arb_poly(), i in 0usize..3, j in 0usize..3) {
            let a = f.partial(i).unwrap().partial(j).unwrap();
            let b = f.partial(j).unwrap().partial(i).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn product_rule_exact(f in arb_poly(), g in arb_poly(), i in 0usize..3) {
            let lhs = f.mul(&g).unwrap().partial(i).unwrap();
            let rhs = f.partial(i).unwrap().mul(&g).unwrap()
                .add(&f.mul(&g.partial(i).unwrap()).unwrap()).unwrap();
            // small integer coefficients keep every operation exact
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn eval_is_multiplicative(f in arb_poly(), g in arb_poly(), p in arb_point()) {
            let lhs = f.mul(&g).unwrap().eval(&p).unwrap();
            let rhs = f.eval(&p).unwrap() * g.eval(&p).unwrap();
            let scale = 1.0 + rhs.norm().max(lhs.norm());
            prop_assert!((lhs - rhs).norm() <= 1e-12 * scale * 10.0);
        }
    }
}
