//! Parametrized caustic curves and the constancy of monodromy data along them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::caustic::{aligned_frame, frames_along, CausticFrame, FrameConfig};
use crate::error::{Error, Result};
use crate::frobenius::FrobeniusManifold;
use crate::linalg::{eigenvalues, max_abs, real, serde_cvec, spectrum_distance, CMat, CVec, C64};
use crate::monodromy::{compute_monodromy, MonodromyConfig, MonodromyData, SectorConfig};
use crate::poly::MultiPoly;

/// A curve s ↦ p(s) in flat coordinates, with n − 1 tangent vectors of the caustic along it.
#[derive(Clone, Debug, PartialEq)]
pub struct CausticCurve {
    pub name: String,
    /// One polynomial in s per flat coordinate.
    pub param: Vec<MultiPoly>,
    pub tangent: Vec<Vec<MultiPoly>>,
    pub s_range: (f64, f64),
}

fn eval_s(p: &MultiPoly, s: f64) -> Result<C64> {
    p.eval(&[real(s)])
}

impl CausticCurve {
    pub fn new(name: &str, param: Vec<MultiPoly>, tangent: Vec<Vec<MultiPoly>>, s_range: (f64, f64)) -> Result<Self> {
        let n = param.len();
        for p in param.iter().chain(tangent.iter().flatten()) {
            if p.num_vars() != 1 {
                return Err(Error::ArityMismatch { expected: 1, found: p.num_vars() });
            }
        }
        for t in &tangent {
            if t.len() != n {
                return Err(Error::ArityMismatch { expected: n, found: t.len() });
            }
        }
        if s_range.0.is_nan() || s_range.1.is_nan() || s_range.0 > s_range.1 {
            return Err(Error::InvalidSpec(format!("curve {name}: empty parameter range")));
        }
        Ok(CausticCurve { name: name.to_string(), param, tangent, s_range })
    }

    pub fn dim(&self) -> usize {
        self.param.len()
    }

    pub fn point(&self, s: f64) -> Result<Vec<C64>> {
        self.param.iter().map(|p| eval_s(p, s)).collect()
    }

    pub fn tangents(&self, s: f64) -> Result<Vec<CVec>> {
        self.tangent
            .iter()
            .map(|t| Ok(CVec::from_vec(t.iter().map(|p| eval_s(p, s)).collect::<Result<Vec<_>>>()?)))
            .collect()
    }

    /// dp/ds
    pub fn velocity(&self, s: f64) -> Result<CVec> {
        let v: Vec<C64> = self.param.iter().map(|p| eval_s(&p.partial(0)?, s)).collect::<Result<_>>()?;
        Ok(CVec::from_vec(v))
    }

    /// `count` evenly spaced parameters covering the range.
    pub fn parameters(&self, count: usize) -> Vec<f64> {
        let (a, b) = self.s_range;
        match count {
            0 => Vec::new(),
            1 => vec![0.5 * (a + b)],
            _ => (0..count).map(|k| a + (b - a) * k as f64 / (count - 1) as f64).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplePoint {
    pub s: f64,
    #[serde(with = "serde_cvec")]
    pub point: CVec,
    pub frame: CausticFrame,
}

/// Sign-aligned caustic frames at `count` parameters of the curve.
pub fn sample_curve(
    m: &FrobeniusManifold,
    curve: &CausticCurve,
    count: usize,
    cfg: &FrameConfig,
) -> Result<Vec<SamplePoint>> {
    let params = curve.parameters(count);
    let frames = frames_along(m, curve, &params, cfg)?;
    Ok(params.into_iter().zip(frames).map(|(s, frame)| SamplePoint { s, point: frame.point.clone(), frame }).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsocheckConfig {
    pub samples: usize,
    pub monodromy: MonodromyConfig,
    /// Step of the central differences used to transport H₀.
    pub fd_step: f64,
    /// Threshold for B_exp and m.
    pub algebraic_tol: f64,
    /// Threshold for Stokes and connection matrices.
    pub integrated_tol: f64,
    /// Threshold for the spectrum of M̃.
    pub spectrum_tol: f64,
}

impl Default for IsocheckConfig {
    fn default() -> Self {
        IsocheckConfig {
            samples: 5,
            monodromy: MonodromyConfig::default(),
            fd_step: 1e-5,
            algebraic_tol: 1e-10,
            integrated_tol: 1e-6,
            spectrum_tol: 1e-8,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Deviations {
    pub m: f64,
    pub b_exp: f64,
    pub stokes: f64,
    pub connection: f64,
    pub monodromy: f64,
    pub spectrum: f64,
}

impl Deviations {
    fn merge(&mut self, other: &Deviations) {
        self.m = self.m.max(other.m);
        self.b_exp = self.b_exp.max(other.b_exp);
        self.stokes = self.stokes.max(other.stokes);
        self.connection = self.connection.max(other.connection);
        self.monodromy = self.monodromy.max(other.monodromy);
        self.spectrum = self.spectrum.max(other.spectrum);
    }
}

/// Consecutive samples sharing one frozen admissible angle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubRange {
    pub first: usize,
    pub last: usize,
    pub phi: f64,
    pub deviations: Deviations,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub s: f64,
    pub point: Vec<C64>,
    pub m: f64,
    pub v12: C64,
    /// Phase θ of the transported H₀.
    pub h0_phase: C64,
    pub phi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub algebraic: f64,
    pub integrated: f64,
    pub spectrum: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstancyReport {
    pub curve: String,
    pub samples: Vec<SampleSummary>,
    pub data: Vec<MonodromyData>,
    pub subranges: Vec<SubRange>,
    /// No single admissible angle covers all samples.
    pub admissibility_break: bool,
    /// Worst deviations over all sub-ranges.
    pub deviations: Deviations,
    pub thresholds: Thresholds,
    pub passed: bool,
}

const GAUSS_NODES: [f64; 5] =
    [-0.906_179_845_938_664, -0.538_469_310_105_683, 0.0, 0.538_469_310_105_683, 0.906_179_845_938_664];
const GAUSS_WEIGHTS: [f64; 5] =
    [0.236_926_885_056_189, 0.478_628_670_499_366, 0.568_888_888_888_889, 0.478_628_670_499_366, 0.236_926_885_056_189];

/// (frame⁻¹ ∂_s frame)₁₂, the rotation rate of the (N, f₂) block.
fn block_rotation(
    m: &FrobeniusManifold,
    curve: &CausticCurve,
    s: f64,
    h: f64,
    reference: &CausticFrame,
    cfg: &FrameConfig,
) -> Result<C64> {
    let omega = crate::caustic::frame_connection_s(m, curve, s, h, reference, cfg)?;
    Ok(omega[(0, 1)])
}

/// θ(s_k) = ∫_{s_0}^{s_k} (frame⁻¹ ∂_s frame)₁₂ ds by five-point Gauss quadrature per interval.
pub fn transported_h0_phase(
    m: &FrobeniusManifold,
    curve: &CausticCurve,
    samples: &[SamplePoint],
    h: f64,
    cfg: &FrameConfig,
) -> Result<Vec<C64>> {
    let mut theta = vec![real(0.0)];
    for pair in samples.windows(2) {
        let (a, b) = (pair[0].s, pair[1].s);
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        let mut acc = real(0.0);
        for (x, w) in GAUSS_NODES.iter().zip(GAUSS_WEIGHTS) {
            let s = mid + half * x;
            let reference = aligned_frame(m, curve, s, &pair[0].frame, cfg)?;
            acc += block_rotation(m, curve, s, h, &reference, cfg).map_err(|e| e.at_sample(s))? * (w * half);
        }
        let last = *theta.last().expect("non-empty");
        theta.push(last + acc);
    }
    Ok(theta)
}

/// T₀ = frame⁻¹ P, with P ordering the flat coordinates by increasing μ.
pub fn flat_levelt_t0(m: &FrobeniusManifold, frame: &CausticFrame) -> CMat {
    let n = m.dim();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| m.mu()[(a, a)].re.total_cmp(&m.mu()[(b, b)].re));
    let inv = frame.inverse(m.eta());
    CMat::from_fn(n, n, |i, j| inv[(i, order[j])])
}

fn max_entry_dev(a: &CMat, b: &CMat) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    max_abs(&(a - b))
}

fn deviations(samples: &[SampleSummary], data: &[MonodromyData]) -> Result<Deviations> {
    let mut dev = Deviations::default();
    let (s0, d0) = (&samples[0], &data[0]);
    let spec0 = eigenvalues(&d0.levelt.monodromy)?;
    for (s, d) in samples.iter().zip(data).skip(1) {
        dev.m = dev.m.max((s.m - s0.m).abs());
        for (x, y) in d.b_exp.iter().zip(&d0.b_exp) {
            dev.b_exp = dev.b_exp.max((x - y).norm());
        }
        for st in &d.stokes {
            let base = d0.stokes_matrix(st.nu).ok_or_else(|| Error::InvalidSpec("missing Stokes index".into()))?;
            dev.stokes = dev.stokes.max(max_entry_dev(&st.matrix, base));
        }
        dev.connection = dev.connection.max(max_entry_dev(&d.connection, &d0.connection));
        dev.monodromy = dev.monodromy.max(max_entry_dev(&d.levelt.monodromy, &d0.levelt.monodromy));
        dev.spectrum = dev.spectrum.max(spectrum_distance(&eigenvalues(&d.levelt.monodromy)?, &spec0));
    }
    Ok(dev)
}

/// Monodromy data at every sample with frozen conventions, and its spread along the curve.
pub fn constancy_report(
    m: &FrobeniusManifold,
    curve: &CausticCurve,
    samples: &[SamplePoint],
    cfg: &IsocheckConfig,
    frame_cfg: &FrameConfig,
) -> Result<ConstancyReport> {
    if samples.len() < 3 {
        return Err(Error::InvalidSpec("constancy needs at least three samples".into()));
    }
    let theta = transported_h0_phase(m, curve, samples, cfg.fd_step, frame_cfg)?;

    // Freeze φ for as long as it stays admissible.
    let mut phis = Vec::with_capacity(samples.len());
    let mut bounds: Vec<(usize, usize, f64)> = Vec::new();
    for (k, sp) in samples.iter().enumerate() {
        let current = bounds.last().map(|b| b.2);
        match current.filter(|&phi| SectorConfig::with_phi(&sp.frame.u, phi).is_some()) {
            Some(phi) => {
                bounds.last_mut().expect("open range").1 = k;
                phis.push(phi);
            }
            None => {
                let phi = cfg.monodromy.phi.unwrap_or(SectorConfig::from_eigenvalues(&sp.frame.u).phi);
                bounds.push((k, k, phi));
                phis.push(phi);
            }
        }
    }

    let data: Vec<MonodromyData> = samples
        .par_iter()
        .enumerate()
        .map(|(k, sp)| {
            let mut mc = cfg.monodromy.clone();
            mc.phi = Some(phis[k]);
            mc.h0_phase = theta[k];
            mc.levelt_t0 = Some(flat_levelt_t0(m, &sp.frame));
            compute_monodromy(&sp.frame.system(), &mc).map_err(|e| e.at_sample(sp.s))
        })
        .collect::<Result<_>>()?;

    let summaries: Vec<SampleSummary> = samples
        .iter()
        .enumerate()
        .map(|(k, sp)| SampleSummary {
            s: sp.s,
            point: sp.point.iter().copied().collect(),
            m: sp.frame.m,
            v12: sp.frame.v12(),
            h0_phase: theta[k],
            phi: phis[k],
        })
        .collect();

    let mut total = Deviations::default();
    let mut subranges = Vec::new();
    for &(first, last, phi) in &bounds {
        let dev = deviations(&summaries[first..=last], &data[first..=last])?;
        total.merge(&dev);
        subranges.push(SubRange { first, last, phi, deviations: dev });
    }
    let passed = total.m <= cfg.algebraic_tol
        && total.b_exp <= cfg.algebraic_tol
        && total.stokes <= cfg.integrated_tol
        && total.connection <= cfg.integrated_tol
        && total.spectrum <= cfg.spectrum_tol;
    Ok(ConstancyReport {
        curve: curve.name.clone(),
        samples: summaries,
        data,
        admissibility_break: subranges.len() > 1,
        subranges,
        deviations: total,
        thresholds: Thresholds {
            algebraic: cfg.algebraic_tol,
            integrated: cfg.integrated_tol,
            spectrum: cfg.spectrum_tol,
        },
        passed,
    })
}

/// Samples the curve and builds its constancy report.
pub fn isocheck(
    m: &FrobeniusManifold,
    curve: &CausticCurve,
    cfg: &IsocheckConfig,
    frame_cfg: &FrameConfig,
) -> Result<ConstancyReport> {
    let samples = sample_curve(m, curve, cfg.samples, frame_cfg)?;
    constancy_report(m, curve, &samples, cfg, frame_cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn curve_points_and_velocity() {
        let c = &fixtures::h3_curves()[0];
        let p = c.point(2.0).unwrap();
        assert_eq!(p, vec![real(0.0), real(8.0), real(2.0)]);
        let v = c.velocity(2.0).unwrap();
        assert_eq!(v[1], real(12.0));
        assert_eq!(c.tangents(1.0).unwrap().len(), 2);
        let ps = c.parameters(5);
        for (a, b) in ps.iter().zip([0.8, 0.9, 1.0, 1.1, 1.2]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn curve_arity_is_checked() {
        let bad = MultiPoly::zero(2);
        assert!(CausticCurve::new("bad", vec![bad], vec![], (0.0, 1.0)).is_err());
    }

    #[test]
    fn h3_samples_have_m_five() {
        let m = FrobeniusManifold::new(fixtures::h3()).unwrap();
        let samples = sample_curve(&m, &fixtures::h3_curves()[0], 5, &FrameConfig::default()).unwrap();
        assert_eq!(samples.len(), 5);
        for sp in &samples {
            assert!((sp.frame.m - 5.0).abs() < 1e-8);
        }
    }

    #[test]
    fn range_through_origin_is_rejected() {
        let m = FrobeniusManifold::new(fixtures::h3()).unwrap();
        let mut curve = fixtures::h3_curves()[0].clone();
        curve.s_range = (-0.5, 0.5);
        let err = sample_curve(&m, &curve, 3, &FrameConfig::default()).unwrap_err();
        assert!(matches!(err, Error::AtSample { s, .. } if s == 0.0));
    }

    #[test]
    fn flat_t0_diagonalizes_residue() {
        let m = FrobeniusManifold::new(fixtures::h3()).unwrap();
        let sp = &sample_curve(&m, &fixtures::h3_curves()[0], 3, &FrameConfig::default()).unwrap()[1];
        let t0 = flat_levelt_t0(&m, &sp.frame);
        let j = crate::linalg::inverse(&t0).unwrap() * &sp.frame.v * &t0;
        let expect = crate::linalg::diag(&[real(-0.4), real(0.0), real(0.4)]);
        assert!(max_abs(&(j - expect)) < 1e-10);
    }
}
