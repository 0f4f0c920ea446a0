//! JSON manifold spec files.

use std::path::Path;
use std::str::FromStr;

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frobenius::ManifoldSpec;
use crate::isocheck::CausticCurve;
use crate::linalg::{real, C64};
use crate::poly::{MultiPoly, Term};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EulerSpec {
    /// Rational weights as "p/q" strings.
    pub linear: Vec<String>,
    pub affine: Vec<C64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveSpec {
    pub name: String,
    /// Monomial list in s for each coordinate.
    pub param: Vec<Vec<Term>>,
    /// n − 1 tangent vectors; empty means the unit direction and the velocity.
    #[serde(default)]
    pub tangent: Vec<Vec<Vec<Term>>>,
    pub s_range: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpecFile {
    pub dimension: usize,
    pub variables: Vec<String>,
    pub unit: String,
    pub charge: String,
    pub euler: EulerSpec,
    pub potential: Vec<Term>,
    #[serde(default)]
    pub caustic_curves: Vec<CurveSpec>,
}

pub fn parse_rational(text: &str) -> Result<Rational64> {
    let t = text.trim();
    let parsed = Rational64::from_str(t).map_err(|_| Error::InvalidSpec(format!("not a rational: {text:?}")))?;
    Ok(parsed)
}

pub fn format_rational(q: &Rational64) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

fn poly_from_terms(num_vars: usize, terms: &[Term]) -> Result<MultiPoly> {
    MultiPoly::from_terms(num_vars, terms.iter().map(|t| (t.exponents.clone(), t.coeff)))
}

impl SpecFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Validated manifold and curves.
    pub fn build(&self) -> Result<(ManifoldSpec, Vec<CausticCurve>)> {
        let n = self.dimension;
        if self.variables.len() != n {
            return Err(Error::ArityMismatch { expected: n, found: self.variables.len() });
        }
        let unit = self
            .variables
            .iter()
            .position(|v| *v == self.unit)
            .ok_or_else(|| Error::InvalidSpec(format!("unit {:?} is not a variable", self.unit)))?;
        let linear = self.euler.linear.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>()?;
        let spec = ManifoldSpec::new(
            self.variables.clone(),
            poly_from_terms(n, &self.potential)?,
            linear,
            self.euler.affine.clone(),
            parse_rational(&self.charge)?,
            unit,
        )?;
        let curves = self.caustic_curves.iter().map(|c| c.build(n, unit)).collect::<Result<Vec<_>>>()?;
        Ok((spec, curves))
    }

    pub fn from_manifold(spec: &ManifoldSpec, curves: &[CausticCurve]) -> Self {
        SpecFile {
            dimension: spec.dim(),
            variables: spec.names.clone(),
            unit: spec.names[spec.unit_index].clone(),
            charge: format_rational(&spec.charge),
            euler: EulerSpec {
                linear: spec.euler_linear.iter().map(format_rational).collect(),
                affine: spec.euler_affine.clone(),
            },
            potential: spec.potential.to_terms(),
            caustic_curves: curves.iter().map(CurveSpec::from_curve).collect(),
        }
    }

    pub fn curve(&self, name: &str) -> Result<CausticCurve> {
        let (_, curves) = self.build()?;
        curves.into_iter().find(|c| c.name == name).ok_or_else(|| Error::UnknownCurve(name.to_string()))
    }
}

impl CurveSpec {
    fn build(&self, n: usize, unit: usize) -> Result<CausticCurve> {
        if self.param.len() != n {
            return Err(Error::ArityMismatch { expected: n, found: self.param.len() });
        }
        let param = self.param.iter().map(|t| poly_from_terms(1, t)).collect::<Result<Vec<_>>>()?;
        let tangent = if self.tangent.is_empty() {
            let e = (0..n).map(|i| MultiPoly::constant(1, real(if i == unit { 1.0 } else { 0.0 }))).collect();
            let v = param.iter().map(|p| p.partial(0)).collect::<Result<Vec<_>>>()?;
            vec![e, v]
        } else {
            self.tangent
                .iter()
                .map(|vec| vec.iter().map(|t| poly_from_terms(1, t)).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?
        };
        CausticCurve::new(&self.name, param, tangent, (self.s_range[0], self.s_range[1]))
    }

    fn from_curve(c: &CausticCurve) -> Self {
        CurveSpec {
            name: c.name.clone(),
            param: c.param.iter().map(MultiPoly::to_terms).collect(),
            tangent: c.tangent.iter().map(|v| v.iter().map(MultiPoly::to_terms).collect()).collect(),
            s_range: [c.s_range.0, c.s_range.1],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn rationals() {
        assert_eq!(parse_rational("4/5").unwrap(), Rational64::new(4, 5));
        assert_eq!(parse_rational(" 1 ").unwrap(), Rational64::new(1, 1));
        assert_eq!(format_rational(&Rational64::new(-2, 6)), "-1/3");
        assert!(parse_rational("0.8").is_err());
    }

    #[test]
    fn fixture_round_trip() {
        for name in ["a3", "b3", "h3", "v0"] {
            let (spec, curves) = fixtures::builtin(name).unwrap();
            let file = SpecFile::from_manifold(&spec, &curves);
            let text = file.to_json().unwrap();
            let back = SpecFile::from_json(&text).unwrap();
            assert_eq!(back, file);
            let (spec2, curves2) = back.build().unwrap();
            assert_eq!(spec2, spec);
            assert_eq!(curves2, curves);
        }
    }

    #[test]
    fn default_tangents_are_unit_and_velocity() {
        let (spec, curves) = fixtures::builtin("h3").unwrap();
        let mut file = SpecFile::from_manifold(&spec, &curves);
        file.caustic_curves[0].tangent.clear();
        let c = file.curve("y-eq-z3").unwrap();
        assert_eq!(c.tangent, curves[0].tangent);
    }

    #[test]
    fn bad_inputs() {
        let (spec, _) = fixtures::builtin("h3").unwrap();
        let mut file = SpecFile::from_manifold(&spec, &[]);
        file.unit = "w".into();
        assert!(matches!(file.build(), Err(Error::InvalidSpec(_))));
        let mut file = SpecFile::from_manifold(&spec, &[]);
        file.potential[0].exponents.push(0);
        assert!(matches!(file.build(), Err(Error::ArityMismatch { .. })));
        assert!(SpecFile::from_json("{").is_err());
        assert!(matches!(SpecFile::from_manifold(&spec, &[]).curve("nope"), Err(Error::UnknownCurve(_))));
    }
}
