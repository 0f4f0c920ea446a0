//! Caustic detection, the orthonormal caustic frame and the invariant m.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frobenius::{FrobeniusManifold, PointAlgebra};
use crate::isocheck::CausticCurve;
use crate::linalg::{
    commutator, eigenvalues, identity, least_squares, max_abs, null_vector, real, serde_cmat, serde_cvec,
    singular_values, CMat, CVec, C64, I,
};
use crate::series::CanonicalSystem;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PointClass {
    Semisimple,
    SemisimpleCoalescent,
    Caustic,
}

impl fmt::Display for PointClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PointClass::Semisimple => "Semisimple",
            PointClass::SemisimpleCoalescent => "SemisimpleCoalescent",
            PointClass::Caustic => "Caustic",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ClassifyConfig {
    /// Relative eigenvalue gap separating distinct from repeated eigenvalues.
    pub tol: f64,
    pub random_probes: usize,
    pub seed: u64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig { tol: 1e-8, random_probes: 8, seed: 0x5eed }
    }
}

/// Discriminant of the characteristic polynomial of E∘, ∏_{i<j} (λ_i − λ_j)².
pub fn bifurcation_value(m: &FrobeniusManifold, p: &[C64]) -> Result<C64> {
    let ev = eigenvalues(&m.euler_mult(p)?)?;
    let mut acc = real(1.0);
    for i in 0..ev.len() {
        for j in i + 1..ev.len() {
            let d = ev[i] - ev[j];
            acc *= d * d;
        }
    }
    Ok(acc)
}

fn matrix_scale(a: &CMat) -> f64 {
    max_abs(a).max(1e-300)
}

/// Smallest pairwise eigenvalue distance relative to the matrix scale.
fn relative_gap(a: &CMat) -> Result<f64> {
    let ev = eigenvalues(a)?;
    let mut gap = f64::INFINITY;
    for i in 0..ev.len() {
        for j in i + 1..ev.len() {
            gap = gap.min((ev[i] - ev[j]).norm());
        }
    }
    Ok(gap / matrix_scale(a))
}

/// Groups eigenvalues whose distance is below `threshold` (single linkage).
pub fn cluster_eigenvalues(ev: &[C64], threshold: f64) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut owner: Vec<Option<usize>> = vec![None; ev.len()];
    for i in 0..ev.len() {
        if owner[i].is_some() {
            continue;
        }
        let g = groups.len();
        groups.push(vec![i]);
        owner[i] = Some(g);
        let mut cursor = 0;
        while cursor < groups[g].len() {
            let a = groups[g][cursor];
            for j in 0..ev.len() {
                if owner[j].is_none() && (ev[a] - ev[j]).norm() < threshold {
                    owner[j] = Some(g);
                    groups[g].push(j);
                }
            }
            cursor += 1;
        }
    }
    groups
}

fn random_probe(rng: &mut ChaCha8Rng, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

/// True when some eigenvalue cluster of `a` has fewer independent eigenvectors than its size.
fn has_defective_cluster(a: &CMat, threshold: f64) -> Result<bool> {
    let n = a.nrows();
    let scale = matrix_scale(a);
    let ev = eigenvalues(a)?;
    for group in cluster_eigenvalues(&ev, threshold * scale) {
        if group.len() < 2 {
            continue;
        }
        let mean: C64 = group.iter().map(|&i| ev[i]).sum::<C64>() / group.len() as f64;
        let shifted = a - identity(n) * mean;
        let sv = singular_values(&shifted);
        let kernel = sv.iter().filter(|&&s| s < threshold * scale).count();
        if kernel < group.len() {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Classifies a point as semisimple, semisimple with coalescing canonical coordinates, or caustic.
///
/// A single probe vector whose multiplication operator has simple spectrum certifies a
/// semisimple algebra. The Euler probe uses the tolerance band; other probes only have to
/// beat √tol, which lies well above the √ε splitting of a perturbed Jordan block.
pub fn classify_point(m: &FrobeniusManifold, p: &[C64], cfg: &ClassifyConfig) -> Result<PointClass> {
    let alg = m.at(p)?;
    let n = alg.dim();
    let gap = relative_gap(&alg.u)?;
    if gap > cfg.tol {
        return Ok(PointClass::Semisimple);
    }
    if gap >= cfg.tol / 10.0 {
        return Err(Error::Inconclusive { gap });
    }
    let strong = cfg.tol.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut probes: Vec<CVec> = (0..n)
        .map(|i| {
            let mut v = CVec::zeros(n);
            v[i] = real(1.0);
            v
        })
        .collect();
    for _ in 0..cfg.random_probes {
        probes.push(random_probe(&mut rng, n));
    }
    for v in &probes {
        if relative_gap(&alg.mult_matrix(v))? > strong {
            return Ok(PointClass::SemisimpleCoalescent);
        }
    }
    for v in probes.iter().skip(n) {
        if has_defective_cluster(&alg.mult_matrix(v), strong)? {
            return Ok(PointClass::Caustic);
        }
    }
    Ok(PointClass::SemisimpleCoalescent)
}

#[derive(Clone, Copy, Debug)]
pub struct FrameConfig {
    pub classify: ClassifyConfig,
    /// Relative eigenvalue clustering threshold for E∘.
    pub cluster_tol: f64,
    /// Allowed ‖ε∘ε‖/‖ε‖².
    pub nilpotent_tol: f64,
    /// Degeneracy threshold for induced metric values.
    pub metric_tol: f64,
}

impl Default for FrameConfig {
    fn default() -> Self {
        FrameConfig { classify: ClassifyConfig::default(), cluster_tol: 1e-8, nilpotent_tol: 1e-6, metric_tol: 1e-12 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameDiagnostics {
    /// max |frameᵀ η frame − Id|
    pub orthonormality: f64,
    /// Largest off-diagonal entry of E∘ in the frame.
    pub u_offdiag: f64,
    /// max |V + Vᵀ| before antisymmetrization.
    pub v_antisymmetry: f64,
    /// max |π_i∘π_j − δ_ij π_i| and |Σπ_i − e|.
    pub idempotents: f64,
    /// ‖ε∘ε‖ / ‖ε‖²
    pub nilpotent: f64,
    /// |η(ε, ε)| / ‖ε‖²
    pub isotropy: f64,
    /// Least-squares residual of the idempotents in the supplied tangent span.
    pub tangency: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CausticFrame {
    #[serde(with = "serde_cvec")]
    pub point: CVec,
    /// Diagonal of E∘ in the frame: (u₂, u₂, u₃, …, uₙ).
    pub u: Vec<C64>,
    /// π₂, …, πₙ in flat coordinates.
    #[serde(with = "crate::linalg::serde_cvec_vec")]
    pub idempotents: Vec<CVec>,
    #[serde(with = "serde_cvec")]
    pub nilpotent: CVec,
    #[serde(with = "serde_cvec")]
    pub normal: CVec,
    /// Columns N, f₂, …, fₙ in flat coordinates.
    #[serde(with = "serde_cmat")]
    pub frame: CMat,
    #[serde(with = "serde_cmat")]
    pub v: CMat,
    pub v12_abs: f64,
    pub m: f64,
    pub diagnostics: FrameDiagnostics,
}

impl CausticFrame {
    pub fn v12(&self) -> C64 {
        self.v[(0, 1)]
    }

    pub fn system(&self) -> CanonicalSystem {
        CanonicalSystem { u: self.u.clone(), v: self.v.clone() }
    }

    /// Inverse of the frame, which is frameᵀ η by orthonormality.
    pub fn inverse(&self, eta: &CMat) -> CMat {
        self.frame.transpose() * eta
    }

    fn flip(&mut self, k: usize) {
        let n = self.frame.nrows();
        for r in 0..n {
            self.frame[(r, k)] = -self.frame[(r, k)];
        }
        for j in 0..n {
            if j != k {
                self.v[(k, j)] = -self.v[(k, j)];
                self.v[(j, k)] = -self.v[(j, k)];
            }
        }
        if k == 0 {
            self.normal = -self.normal.clone();
        }
    }

    /// Picks the sign of N with Re(2i V¹₂) > 0.
    fn orient_normal(&mut self) {
        if (I * 2.0 * self.v12()).re < 0.0 {
            self.flip(0);
        }
    }

    /// Flips columns to match a neighbouring frame; fails when the choice is ambiguous.
    pub fn align_to(&mut self, reference: &CausticFrame, s: f64) -> Result<()> {
        let n = self.frame.ncols();
        for k in 1..n {
            let a = self.frame.column(k).into_owned();
            let b = reference.frame.column(k).into_owned();
            let same = (&a - &b).norm();
            let opposite = (&a + &b).norm();
            if opposite < same {
                self.flip(k);
            }
            if same.min(opposite) > 0.8 * same.max(opposite) {
                return Err(Error::FrameDiscontinuity { s });
            }
        }
        self.orient_normal();
        let a = self.frame.column(0).into_owned();
        let b = reference.frame.column(0).into_owned();
        if (&a + &b).norm() < (&a - &b).norm() {
            return Err(Error::FrameDiscontinuity { s });
        }
        Ok(())
    }
}

fn idempotent_from_eigenvector(alg: &PointAlgebra, v: &CVec, tol: f64) -> Result<CVec> {
    let sq = alg.product(v, v);
    let lambda = v.dotc(&sq) / v.dotc(v);
    if lambda.norm() < tol * v.norm() {
        return Err(Error::ClusterStructure("eigenvector is nilpotent".into()));
    }
    Ok(v / lambda)
}

fn principal_normalize(alg: &PointAlgebra, v: &CVec, tol: f64) -> Result<CVec> {
    let g = alg.inner(v, v);
    if g.norm() < tol * v.norm_squared().max(1e-300) {
        return Err(Error::DegenerateInducedMetric);
    }
    Ok(v / g.sqrt())
}

/// Frame matrix V = frameᵀ η μ frame, with its raw antisymmetry defect.
fn grading_in_frame(alg: &PointAlgebra, frame: &CMat) -> (CMat, f64) {
    let raw = frame.transpose() * &alg.eta * &alg.mu * frame;
    let defect = max_abs(&(&raw + raw.transpose()));
    ((&raw - raw.transpose()) * real(0.5), defect)
}

fn frame_diagnostics(alg: &PointAlgebra, frame: &CMat, u: &[C64], idem: &[CVec]) -> (f64, f64, f64) {
    let n = frame.ncols();
    let gram = frame.transpose() * &alg.eta * frame;
    let orth = max_abs(&(gram - identity(n)));
    let uf = frame.transpose() * &alg.eta * &alg.u * frame;
    let mut off = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { u[i] } else { real(0.0) };
            off = off.max((uf[(i, j)] - target).norm());
        }
    }
    let mut idem_res = 0.0_f64;
    let mut sum = CVec::zeros(n);
    for (a, pa) in idem.iter().enumerate() {
        sum += pa;
        for (b, pb) in idem.iter().enumerate() {
            let prod = alg.product(pa, pb);
            let target = if a == b { pa.clone() } else { CVec::zeros(n) };
            idem_res = idem_res.max((prod - target).camax());
        }
    }
    idem_res = idem_res.max((sum - alg.unit()).camax());
    (orth, off, idem_res)
}

fn tangency_residual(idem: &[CVec], tangents: &[CVec]) -> Result<Option<f64>> {
    if tangents.is_empty() {
        return Ok(None);
    }
    let n = idem[0].len();
    let basis = CMat::from_fn(n, tangents.len(), |r, c| tangents[c][r]);
    let mut worst = 0.0_f64;
    for p in idem {
        let (_, res) = least_squares(&basis, p)?;
        worst = worst.max(res / p.norm());
    }
    Ok(Some(worst))
}

/// Builds the caustic frame (N, f₂, …, fₙ) at a caustic point.
pub fn caustic_frame(
    m: &FrobeniusManifold,
    p: &[C64],
    caustic_tangent: &[CVec],
    cfg: &FrameConfig,
) -> Result<CausticFrame> {
    let class = classify_point(m, p, &cfg.classify)?;
    if class != PointClass::Caustic {
        return Err(Error::NotCaustic { class: class.to_string() });
    }
    let alg = m.at(p)?;
    let n = alg.dim();
    let ev = eigenvalues(&alg.u)?;
    let scale = ev.iter().fold(0.0_f64, |a, z| a.max(z.norm())).max(1e-300);
    let groups = cluster_eigenvalues(&ev, cfg.cluster_tol * scale);
    let doubles: Vec<&Vec<usize>> = groups.iter().filter(|g| g.len() > 1).collect();
    if doubles.len() != 1 || doubles[0].len() != 2 {
        return Err(Error::ClusterStructure(format!(
            "expected exactly one double eigenvalue, found cluster sizes {:?}",
            groups.iter().map(Vec::len).collect::<Vec<_>>()
        )));
    }
    let double = doubles[0];
    let u2 = (ev[double[0]] + ev[double[1]]) * 0.5;
    let simple: Vec<C64> = groups.iter().filter(|g| g.len() == 1).map(|g| ev[g[0]]).collect();

    let mut idempotents = Vec::with_capacity(n - 1);
    let mut simple_idem = Vec::with_capacity(n - 2);
    for &ui in &simple {
        let (vec, _) = null_vector(&(&alg.u - identity(n) * ui));
        simple_idem.push(idempotent_from_eigenvector(&alg, &vec, cfg.metric_tol)?);
    }
    let mut pi2 = alg.unit();
    for pi in &simple_idem {
        pi2 -= pi;
    }
    idempotents.push(pi2.clone());
    idempotents.extend(simple_idem.iter().cloned());

    // Nilpotent direction inside W = π₂∘T: complete π₂ by a column of π₂∘, then shift.
    let p2 = alg.mult_matrix(&pi2);
    let mut best: Option<(CVec, f64)> = None;
    let pi2_norm2 = pi2.norm_squared();
    for col in 0..n {
        let c = p2.column(col).into_owned();
        let w = &c - &pi2 * (pi2.dotc(&c) / pi2_norm2);
        let wn = w.norm();
        if wn < 1e-8 * c.norm().max(1e-300) {
            continue;
        }
        let w = w.unscale(wn);
        let ww = alg.product(&w, &w);
        let basis = CMat::from_columns(&[pi2.clone(), w.clone()]);
        let (coef, _) = least_squares(&basis, &ww)?;
        let b = coef[1];
        let eps = &w - &pi2 * (b * 0.5);
        let res = alg.product(&eps, &eps).norm() / eps.norm_squared();
        if best.as_ref().is_none_or(|(_, r)| res < *r) {
            best = Some((eps, res));
        }
    }
    let (eps, nil_res) = best.ok_or(Error::MultipleNilpotents { residual: f64::INFINITY })?;
    if nil_res > cfg.nilpotent_tol {
        return Err(Error::MultipleNilpotents { residual: nil_res });
    }
    let isotropy = alg.inner(&eps, &eps).norm() / eps.norm_squared();

    let g22 = alg.inner(&pi2, &pi2);
    if g22.norm() < cfg.metric_tol * pi2_norm2 {
        return Err(Error::DegenerateInducedMetric);
    }
    let n0 = &eps - &pi2 * (alg.inner(&eps, &pi2) / g22);
    let normal = principal_normalize(&alg, &n0, cfg.metric_tol)?;

    let mut cols = Vec::with_capacity(n);
    cols.push(normal.clone());
    for pi in &idempotents {
        cols.push(principal_normalize(&alg, pi, cfg.metric_tol)?);
    }
    let frame = CMat::from_columns(&cols);
    let (v, v_defect) = grading_in_frame(&alg, &frame);
    let mut u = vec![u2, u2];
    u.extend(simple.iter().copied());
    let (orth, off, idem_res) = frame_diagnostics(&alg, &frame, &u, &idempotents);
    let tangency = tangency_residual(&idempotents, caustic_tangent)?;

    let mut out = CausticFrame {
        point: CVec::from_column_slice(p),
        u,
        idempotents,
        nilpotent: eps,
        normal,
        frame,
        v,
        v12_abs: 0.0,
        m: f64::NAN,
        diagnostics: FrameDiagnostics {
            orthonormality: orth,
            u_offdiag: off,
            v_antisymmetry: v_defect,
            idempotents: idem_res,
            nilpotent: nil_res,
            isotropy,
            tangency,
        },
    };
    out.orient_normal();
    let hm = hertling_m(&out.v, 1e-10)?;
    out.v12_abs = hm.v12_abs;
    out.m = hm.m;
    Ok(out)
}

/// Frame of normalized idempotents at a point with simple spectrum of E∘.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemisimpleFrame {
    pub u: Vec<C64>,
    #[serde(with = "serde_cmat")]
    pub frame: CMat,
    #[serde(with = "serde_cmat")]
    pub v: CMat,
    pub orthonormality: f64,
    pub v_antisymmetry: f64,
}

impl SemisimpleFrame {
    pub fn system(&self) -> CanonicalSystem {
        CanonicalSystem { u: self.u.clone(), v: self.v.clone() }
    }
}

pub fn semisimple_frame(m: &FrobeniusManifold, p: &[C64], tol: f64) -> Result<SemisimpleFrame> {
    let alg = m.at(p)?;
    let n = alg.dim();
    let gap = relative_gap(&alg.u)?;
    if gap <= tol {
        return Err(Error::ClusterStructure("E∘ has a repeated eigenvalue".into()));
    }
    let u = eigenvalues(&alg.u)?;
    let mut cols = Vec::with_capacity(n);
    let mut idem = Vec::with_capacity(n);
    for &ui in &u {
        let (vec, _) = null_vector(&(&alg.u - identity(n) * ui));
        let pi = idempotent_from_eigenvector(&alg, &vec, 1e-12)?;
        cols.push(principal_normalize(&alg, &pi, 1e-12)?);
        idem.push(pi);
    }
    let frame = CMat::from_columns(&cols);
    let (v, v_antisymmetry) = grading_in_frame(&alg, &frame);
    let (orthonormality, _, _) = frame_diagnostics(&alg, &frame, &u, &idem);
    Ok(SemisimpleFrame { u, frame, v, orthonormality, v_antisymmetry })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HertlingM {
    pub m: f64,
    pub v12_abs: f64,
    pub near_integer: bool,
}

/// m = 2/(1 − 2|V¹₂|).
pub fn hertling_m(v: &CMat, tol: f64) -> Result<HertlingM> {
    let v12_abs = v[(0, 1)].norm();
    if v12_abs < tol {
        return Err(Error::CoalescenceNotCaustic { v12: v12_abs });
    }
    let m = 2.0 / (1.0 - 2.0 * v12_abs);
    let near_integer = (m - m.round()).abs() < 1e-6 && m.round() >= 3.0;
    Ok(HertlingM { m, v12_abs, near_integer })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproachFit {
    pub m_estimate: f64,
    pub slope: f64,
    /// RMS residual of the log-log fit.
    pub residual: f64,
    /// (t, gap) pairs.
    pub samples: Vec<(f64, f64)>,
}

/// Default parameters: 8 points log-spaced from 10^−1.5 down to 10^−3.5.
pub fn default_approach_samples() -> Vec<f64> {
    (0..8).map(|k| 10f64.powf(-1.5 - 2.0 * k as f64 / 7.0)).collect()
}

/// Gaps below this fraction of the spectral scale are dominated by rounding, since a perturbed
/// Jordan block splits like the square root of the entry error.
const GAP_FLOOR: f64 = 1e-9;

/// Estimates m from the opening rate of the coalescing eigenvalue pair off the caustic.
pub fn m_from_approach(
    m: &FrobeniusManifold,
    caustic_point: &[C64],
    normal_direction: &CVec,
    t_samples: &[f64],
) -> Result<ApproachFit> {
    let mut samples = Vec::with_capacity(t_samples.len());
    for &t in t_samples {
        let p: Vec<C64> = caustic_point.iter().zip(normal_direction.iter()).map(|(a, b)| a + b * t).collect();
        let ev = eigenvalues(&m.euler_mult(&p)?)?;
        let scale = ev.iter().fold(0.0_f64, |a, z| a.max(z.norm())).max(1e-300);
        let mut gap = f64::INFINITY;
        for i in 0..ev.len() {
            for j in i + 1..ev.len() {
                gap = gap.min((ev[i] - ev[j]).norm());
            }
        }
        if gap >= GAP_FLOOR * scale {
            samples.push((t, gap));
        }
    }
    if samples.len() < 4 {
        return Err(Error::FitFailure { residual: f64::INFINITY });
    }
    let xs: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (my + slope * (x - mx));
            r * r
        })
        .sum::<f64>()
        / k)
        .sqrt();
    if residual > 0.1 || !slope.is_finite() {
        return Err(Error::FitFailure { residual });
    }
    Ok(ApproachFit { m_estimate: 2.0 * slope, slope, residual, samples })
}

/// Frames at a list of curve parameters, sign-aligned in order.
pub fn frames_along(
    m: &FrobeniusManifold,
    curve: &CausticCurve,
    params: &[f64],
    cfg: &FrameConfig,
) -> Result<Vec<CausticFrame>> {
    let mut out: Vec<CausticFrame> = Vec::with_capacity(params.len());
    for &s in params {
        let p = curve.point(s)?;
        let tangents = curve.tangents(s)?;
        let mut f = caustic_frame(m, &p, &tangents, cfg).map_err(|e| e.at_sample(s))?;
        if let Some(prev) = out.last() {
            f.align_to(prev, s)?;
        }
        out.push(f);
    }
    Ok(out)
}

/// Frame at `s` aligned to `reference`.
pub fn aligned_frame(
    m: &FrobeniusManifold,
    curve: &CausticCurve,
    s: f64,
    reference: &CausticFrame,
    cfg: &FrameConfig,
) -> Result<CausticFrame> {
    let p = curve.point(s)?;
    let mut f = caustic_frame(m, &p, &[], cfg).map_err(|e| e.at_sample(s))?;
    f.align_to(reference, s)?;
    Ok(f)
}

/// Central-difference estimate of frame⁻¹ ∂_s frame at `s`.
pub fn frame_connection_s(
    m: &FrobeniusManifold,
    curve: &CausticCurve,
    s: f64,
    h: f64,
    reference: &CausticFrame,
    cfg: &FrameConfig,
) -> Result<CMat> {
    let plus = aligned_frame(m, curve, s + h, reference, cfg)?;
    let minus = aligned_frame(m, curve, s - h, reference, cfg)?;
    let center = aligned_frame(m, curve, s, reference, cfg)?;
    let d = (&plus.frame - &minus.frame) / real(2.0 * h);
    Ok(center.inverse(m.eta()) * d)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConnectionSample {
    pub s: f64,
    /// max over pairs of ‖[E_i, ω_j] − [E_j, ω_i]‖
    pub symmetry: f64,
    /// max over i of ‖∂V/∂u_i − [V, ω_i]‖
    pub v_derivative: f64,
    /// max over i of ‖[U, ω_i] + [E_i, V]‖
    pub u_commutator: f64,
    /// Curvature of the 2×2-truncated connection.
    pub curvature: f64,
    /// max over i of |∂V¹₂/∂u_i|
    pub v12_derivative: f64,
    /// Residual of π₂, π₃ in span{e, ∂_s}.
    pub tangency: f64,
    /// ‖∂_r frame‖ along the unit direction.
    pub unit_derivative: f64,
    pub v12: C64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConnectionReport {
    pub samples: Vec<ConnectionSample>,
    pub max_identity: f64,
    pub max_curvature: f64,
    pub max_v12_derivative: f64,
    pub v12_spread: f64,
    pub tol: f64,
    pub passed: bool,
}

struct LocalConnection {
    /// ω_i, one per canonical direction (u₂, u₃).
    omega: Vec<CMat>,
    /// Coefficients (a_i, b_i) of π_i in the basis {e, ∂_s}.
    coef: Vec<(C64, C64)>,
    tangency: f64,
    frame: CausticFrame,
    dv_ds: CMat,
    unit_derivative: f64,
}

fn local_connection(
    m: &FrobeniusManifold,
    curve: &CausticCurve,
    s: f64,
    h: f64,
    reference: &CausticFrame,
    cfg: &FrameConfig,
) -> Result<LocalConnection> {
    let center = aligned_frame(m, curve, s, reference, cfg)?;
    let plus = aligned_frame(m, curve, s + h, &center, cfg)?;
    let minus = aligned_frame(m, curve, s - h, &center, cfg)?;
    let inv = center.inverse(m.eta());
    let omega_s = &inv * (&plus.frame - &minus.frame) / real(2.0 * h);
    let dv_ds = (&plus.v - &minus.v) / real(2.0 * h);

    let p = curve.point(s)?;
    let e = m.unit();
    let shifted = |t: f64| -> Result<CausticFrame> {
        let q: Vec<C64> = p.iter().zip(e.iter()).map(|(a, b)| a + b * t).collect();
        let mut f = caustic_frame(m, &q, &[], cfg)?;
        f.align_to(&center, s)?;
        Ok(f)
    };
    let unit_derivative = max_abs(&((shifted(h)?.frame - shifted(-h)?.frame) / real(2.0 * h)));

    let basis = CMat::from_columns(&[e.clone(), curve.velocity(s)?]);
    let mut coef = Vec::new();
    let mut omega = Vec::new();
    let mut tangency = 0.0_f64;
    for pi in &center.idempotents {
        let (x, res) = least_squares(&basis, pi)?;
        tangency = tangency.max(res / pi.norm());
        coef.push((x[0], x[1]));
        omega.push(&omega_s * x[1]);
    }
    Ok(LocalConnection { omega, coef, tangency, frame: center, dv_ds, unit_derivative })
}

fn block_projector(n: usize, i: usize) -> CMat {
    let mut e = CMat::zeros(n, n);
    if i == 0 {
        e[(0, 0)] = real(1.0);
        e[(1, 1)] = real(1.0);
    } else {
        e[(i + 1, i + 1)] = real(1.0);
    }
    e
}

fn truncate2(a: &CMat) -> CMat {
    let mut out = CMat::zeros(a.nrows(), a.ncols());
    for i in 0..2 {
        for j in 0..2 {
            out[(i, j)] = a[(i, j)];
        }
    }
    out
}

/// Checks the connection identities of the pulled-back flat connection along a curve in a
/// 3-dimensional manifold, where {e, ∂_s} spans the caustic tangent plane.
pub fn connection_identities_check(
    m: &FrobeniusManifold,
    curve: &CausticCurve,
    s_samples: &[f64],
    fd_step: f64,
    tol: f64,
    cfg: &FrameConfig,
) -> Result<ConnectionReport> {
    let n = m.dim();
    if n != 3 {
        return Err(Error::InvalidSpec("connection identities are checked for n = 3 only".into()));
    }
    let frames = frames_along(m, curve, s_samples, cfg)?;
    let h = fd_step;
    let mut samples = Vec::with_capacity(s_samples.len());
    for (&s, reference) in s_samples.iter().zip(&frames) {
        let c0 = local_connection(m, curve, s, h, reference, cfg).map_err(|e| e.at_sample(s))?;
        let cp = local_connection(m, curve, s + h, h, &c0.frame, cfg).map_err(|e| e.at_sample(s))?;
        let cm = local_connection(m, curve, s - h, h, &c0.frame, cfg).map_err(|e| e.at_sample(s))?;
        let v = &c0.frame.v;
        let u = crate::linalg::diag(&c0.frame.u);
        let proj: Vec<CMat> = (0..n - 1).map(|i| block_projector(n, i)).collect();

        let mut symmetry = 0.0_f64;
        let mut v_derivative = 0.0_f64;
        let mut u_comm = 0.0_f64;
        let mut v12_derivative = 0.0_f64;
        for i in 0..n - 1 {
            let (_, b) = c0.coef[i];
            let dv = &c0.dv_ds * b;
            v_derivative = v_derivative.max(max_abs(&(&dv - commutator(v, &c0.omega[i]))));
            u_comm = u_comm.max(max_abs(&(commutator(&u, &c0.omega[i]) + commutator(&proj[i], v))));
            v12_derivative = v12_derivative.max(dv[(0, 1)].norm());
            for j in 0..n - 1 {
                let r = commutator(&proj[i], &c0.omega[j]) - commutator(&proj[j], &c0.omega[i]);
                symmetry = symmetry.max(max_abs(&r));
            }
        }

        // ∂_{u_i} X = b_i ∂_s X, since nothing depends on the unit coordinate.
        let d_omega = |j: usize| -> CMat { (truncate2(&cp.omega[j]) - truncate2(&cm.omega[j])) / real(2.0 * h) };
        let (_, b2) = c0.coef[0];
        let (_, b3) = c0.coef[1];
        let w2 = truncate2(&c0.omega[0]);
        let w3 = truncate2(&c0.omega[1]);
        let curv = d_omega(1) * b2 - d_omega(0) * b3 + commutator(&w2, &w3);

        samples.push(ConnectionSample {
            s,
            symmetry,
            v_derivative,
            u_commutator: u_comm,
            curvature: max_abs(&curv),
            v12_derivative,
            tangency: c0.tangency,
            unit_derivative: c0.unit_derivative,
            v12: c0.frame.v12(),
        });
    }
    let max_identity = samples
        .iter()
        .map(|x| x.symmetry.max(x.v_derivative).max(x.u_commutator).max(x.unit_derivative))
        .fold(0.0, f64::max);
    let max_curvature = samples.iter().map(|x| x.curvature).fold(0.0, f64::max);
    let max_v12_derivative = samples.iter().map(|x| x.v12_derivative).fold(0.0, f64::max);
    let v12_spread =
        samples.iter().flat_map(|a| samples.iter().map(move |b| (a.v12 - b.v12).norm())).fold(0.0, f64::max);
    let passed = max_identity < tol && max_curvature < tol && max_v12_derivative < tol;
    Ok(ConnectionReport { samples, max_identity, max_curvature, max_v12_derivative, v12_spread, tol, passed })
}
