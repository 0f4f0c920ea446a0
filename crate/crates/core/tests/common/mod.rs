#![allow(dead_code)]

use causticlab::caustic::{caustic_frame, CausticFrame, FrameConfig};
use causticlab::fixtures;
use causticlab::isocheck::CausticCurve;
use causticlab::FrobeniusManifold;

/// A caustic component of one of the built-in manifolds with its Hertling invariant.
pub struct Component {
    pub fixture: &'static str,
    pub manifold: FrobeniusManifold,
    pub curve: CausticCurve,
    pub m: f64,
}

impl Component {
    pub fn label(&self) -> String {
        format!("{}/{}", self.fixture, self.curve.name)
    }

    pub fn frame(&self, s: f64) -> CausticFrame {
        let p = self.curve.point(s).expect("curve point");
        let t = self.curve.tangents(s).expect("curve tangents");
        caustic_frame(&self.manifold, &p, &t, &FrameConfig::default()).expect("caustic frame")
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.curve.s_range.0 + self.curve.s_range.1)
    }
}

pub fn manifold(name: &str) -> FrobeniusManifold {
    FrobeniusManifold::new(fixtures::builtin(name).expect("fixture").0).expect("valid fixture")
}

/// All five caustic components in the order H₃ (m = 5, 3), B₃ (m = 4, 3), A₃ (m = 3).
pub fn components() -> Vec<Component> {
    let expected: [(&str, &str, f64); 5] = [
        ("h3", "y-eq-z3", 5.0),
        ("h3", "27y+5z3", 3.0),
        ("b3", "2y-3z2", 4.0),
        ("b3", "2y+z2", 3.0),
        ("a3", "27y2+8z3", 3.0),
    ];
    expected
        .iter()
        .map(|&(fixture, name, m)| {
            let (spec, curves) = fixtures::builtin(fixture).expect("fixture");
            let curve = curves.into_iter().find(|c| c.name == name).expect("curve");
            Component { fixture, manifold: FrobeniusManifold::new(spec).expect("valid"), curve, m }
        })
        .collect()
}

/// Least-squares slope of ln y against ln x.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
