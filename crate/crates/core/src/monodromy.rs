//! Sectors, path integration, canonical solutions, Stokes and connection matrices.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, inverse, max_abs, real, serde_cmat, spectrum_distance, CMat, C64, I};
use crate::series::{CanonicalSystem, FormalReduction, LeveltData, ZPoint};

fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= TAU - 1e-15 {
        0.0
    } else {
        r
    }
}

/// Angles in [0, 2π) where Re(z(u_i − u_j)) = 0 for some u_i ≠ u_j, sorted and deduplicated.
pub fn stokes_rays(u: &[C64]) -> Vec<f64> {
    let mut rays: Vec<f64> = Vec::new();
    for i in 0..u.len() {
        for j in i + 1..u.len() {
            let d = u[i] - u[j];
            if d.norm() <= 1e-10 {
                continue;
            }
            for sign in [1.0, -1.0] {
                let a = wrap_angle(sign * FRAC_PI_2 - d.arg());
                if !rays.iter().any(|r| {
                    let diff = (r - a).abs();
                    diff < 1e-12 || (TAU - diff) < 1e-12
                }) {
                    rays.push(a);
                }
            }
        }
    }
    rays.sort_by(f64::total_cmp);
    rays
}

/// Midpoint of the widest gap between consecutive rays, preferring a value in [0, π), and
/// ε = min(gap/4, π/12).
pub fn admissible_angle(rays: &[f64]) -> (f64, f64) {
    if rays.is_empty() {
        return (0.0, PI / 12.0);
    }
    let k = rays.len();
    let gaps: Vec<(f64, f64)> = (0..k)
        .map(|i| {
            let a = rays[i];
            let b = if i + 1 < k { rays[i + 1] } else { rays[0] + TAU };
            (b - a, wrap_angle(0.5 * (a + b)))
        })
        .collect();
    let widest = gaps.iter().map(|g| g.0).fold(0.0, f64::max);
    let mut candidates: Vec<f64> = gaps.iter().filter(|g| g.0 > widest - 1e-12).map(|g| g.1).collect();
    candidates.sort_by(f64::total_cmp);
    let phi = candidates.iter().copied().find(|&p| p < PI).unwrap_or(candidates[0]);
    (phi, (widest / 4.0).min(PI / 12.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectorConfig {
    pub phi: f64,
    pub eps: f64,
    pub nu_range: (i64, i64),
    pub stokes_rays: Vec<f64>,
}

impl SectorConfig {
    pub fn from_eigenvalues(u: &[C64]) -> Self {
        let rays = stokes_rays(u);
        let (phi, eps) = admissible_angle(&rays);
        SectorConfig { phi, eps, nu_range: (0, 1), stokes_rays: rays }
    }

    /// Uses a prescribed angle, keeping ε from the ray arrangement; `None` if φ is not admissible.
    pub fn with_phi(u: &[C64], phi: f64) -> Option<Self> {
        let mut cfg = Self::from_eigenvalues(u);
        if !is_admissible(&cfg.stokes_rays, phi) {
            return None;
        }
        cfg.eps = cfg.eps.min(0.5 * ray_distance(&cfg.stokes_rays, phi));
        cfg.phi = phi;
        Some(cfg)
    }

    /// Argument range of S_ν.
    pub fn sector(&self, nu: i64) -> (f64, f64) {
        let shift = nu as f64 * PI;
        (self.phi - PI - self.eps + shift, self.phi + self.eps + shift)
    }

    /// Direction of the admissible ray inside S_ν ∩ S_{ν+1}.
    pub fn overlap_direction(&self, nu: i64) -> f64 {
        self.phi + nu as f64 * PI
    }
}

fn ray_distance(rays: &[f64], phi: f64) -> f64 {
    rays.iter()
        .map(|r| {
            let d = (wrap_angle(phi) - r).abs() % PI;
            d.min(PI - d)
        })
        .fold(FRAC_PI_2, f64::min)
}

pub fn is_admissible(rays: &[f64], phi: f64) -> bool {
    ray_distance(rays, phi) > 1e-6
}

/// A path piece; the real parameter τ runs over [0, 1].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Segment {
    Line { from: C64, to: C64 },
    Ray { arg: f64, from: f64, to: f64 },
    Arc { radius: f64, from: f64, to: f64 },
}

impl Segment {
    fn point(&self, tau: f64) -> (C64, C64) {
        match *self {
            Segment::Line { from, to } => (from + (to - from) * tau, to - from),
            Segment::Ray { arg, from, to } => {
                let dir = C64::from_polar(1.0, arg);
                (dir * (from + (to - from) * tau), dir * (to - from))
            }
            Segment::Arc { radius, from, to } => {
                let z = C64::from_polar(radius, from + (to - from) * tau);
                (z, z * I * (to - from))
            }
        }
    }

    fn split(self) -> Vec<Segment> {
        match self {
            Segment::Arc { radius, from, to } => {
                let pieces = (((to - from).abs() / (PI / 16.0)).ceil() as usize).max(1);
                (0..pieces)
                    .map(|k| Segment::Arc {
                        radius,
                        from: from + (to - from) * k as f64 / pieces as f64,
                        to: from + (to - from) * (k + 1) as f64 / pieces as f64,
                    })
                    .collect()
            }
            s => vec![s],
        }
    }
}

/// Radial leg from `from` to |to|, then an arc to arg(to).
pub fn ray_then_arc(from: ZPoint, to: ZPoint) -> Vec<Segment> {
    let mut path = Vec::new();
    if from.modulus != to.modulus {
        path.push(Segment::Ray { arg: from.arg, from: from.modulus, to: to.modulus });
    }
    if from.arg != to.arg {
        path.push(Segment::Arc { radius: to.modulus, from: from.arg, to: to.arg });
    }
    path
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrateOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions { rtol: 1e-10, atol: 1e-10, max_steps: 2_000_000 }
    }
}

#[derive(Clone, Debug)]
pub struct Integration {
    pub y: CMat,
    /// |det Y(end) − det Y(start)·exp(∫ tr A dz)| / |det Y(end)|, for square Y.
    pub liouville: f64,
    pub steps: usize,
    pub rejected: usize,
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] =
    [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

fn all_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Adaptive Dormand–Prince integration of Y′ = A(z)Y along a path, with a trace accumulator
/// for the Liouville check.
pub fn integrate<F>(a: F, path: &[Segment], y0: &CMat, opts: &IntegrateOptions) -> Result<Integration>
where
    F: Fn(C64) -> CMat,
{
    let mut y = y0.clone();
    let mut theta = real(0.0);
    let mut steps = 0usize;
    let mut rejected = 0usize;
    let pieces: Vec<Segment> = path.iter().flat_map(|s| s.split()).collect();
    for (index, seg) in pieces.iter().enumerate() {
        let rhs = |tau: f64, y: &CMat| -> (CMat, C64) {
            let (z, dz) = seg.point(tau);
            let m = a(z) * dz;
            let tr = m.trace();
            (&m * y, tr)
        };
        let mut tau = 0.0_f64;
        let mut h = 0.02_f64;
        let (mut k1, mut t1) = rhs(0.0, &y);
        while tau < 1.0 {
            if steps + rejected > opts.max_steps {
                return Err(Error::StepUnderflow { segment: index, tau });
            }
            h = h.min(1.0 - tau);
            let mut ks: Vec<CMat> = Vec::with_capacity(7);
            let mut ts: Vec<C64> = Vec::with_capacity(7);
            ks.push(k1.clone());
            ts.push(t1);
            for stage in 1..7 {
                let mut ys = y.clone();
                let mut th = real(0.0);
                for (j, coef) in A[stage].iter().enumerate().take(stage) {
                    if *coef != 0.0 {
                        ys += &ks[j] * real(h * coef);
                        th += ts[j] * (h * coef);
                    }
                }
                let _ = th;
                let (k, t) = rhs(tau + C[stage] * h, &ys);
                ks.push(k);
                ts.push(t);
            }
            let mut y_new = y.clone();
            let mut th_new = theta;
            for (j, coef) in A[6].iter().enumerate() {
                if *coef != 0.0 {
                    y_new += &ks[j] * real(h * coef);
                    th_new += ts[j] * (h * coef);
                }
            }
            let mut err = CMat::zeros(y.nrows(), y.ncols());
            for (j, coef) in E.iter().enumerate() {
                if *coef != 0.0 {
                    err += &ks[j] * real(h * coef);
                }
            }
            if !all_finite(&y_new) {
                return Err(Error::NonFiniteValue);
            }
            let mut acc = 0.0_f64;
            for ((e, yo), yn) in err.iter().zip(y.iter()).zip(y_new.iter()) {
                let sc = opts.atol + opts.rtol * yo.norm().max(yn.norm());
                let r = e.norm() / sc;
                acc += r * r;
            }
            let err_norm = (acc / err.len() as f64).sqrt();
            if !err_norm.is_finite() {
                return Err(Error::NonFiniteValue);
            }
            if err_norm <= 1.0 {
                tau += h;
                y = y_new;
                theta = th_new;
                k1 = ks.pop().expect("seven stages");
                t1 = ts.pop().expect("seven stages");
                steps += 1;
                let fac = if err_norm == 0.0 { 5.0 } else { (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0) };
                h *= fac;
            } else {
                rejected += 1;
                h *= (0.9 * err_norm.powf(-0.2)).clamp(0.1, 0.9);
            }
            if h < 1e-14 {
                return Err(Error::StepUnderflow { segment: index, tau });
            }
        }
    }
    let liouville = if y.is_square() && y.nrows() > 0 {
        let d_end = y.determinant();
        let d_pred = y0.determinant() * theta.exp();
        (d_end - d_pred).norm() / d_end.norm().max(1e-300)
    } else {
        0.0
    };
    Ok(Integration { y, liouville, steps, rejected })
}

/// Tolerances and radius policy for the monodromy computation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonodromyConfig {
    /// Truncation order K of the formal solution.
    pub order: usize,
    pub k_levelt: usize,
    pub integrate: IntegrateOptions,
    /// Preferred tail estimate at the anchor radius.
    pub tail_target: f64,
    /// Anchors whose tail estimate exceeds this are rejected.
    pub tail_reject: f64,
    /// Comparison radius in units of 1/max|u_i − u_j|.
    pub compare_scale: f64,
    /// Frozen admissible angle, if any.
    pub phi: Option<f64>,
    /// Rotation θ of the H₀ columns.
    pub h0_phase: C64,
    /// Prescribed eigenvector matrix of the residue for the Levelt solution.
    #[serde(skip)]
    pub levelt_t0: Option<CMat>,
    /// Overlap points whose Stokes estimates disagree by more than this raise an error.
    pub overlap_tol: f64,
}

impl Default for MonodromyConfig {
    fn default() -> Self {
        MonodromyConfig {
            order: 10,
            k_levelt: 14,
            integrate: IntegrateOptions::default(),
            tail_target: 1e-11,
            tail_reject: 1e-7,
            compare_scale: 1.0,
            phi: None,
            h0_phase: real(0.0),
            levelt_t0: None,
            overlap_tol: 1e-8,
        }
    }
}

#[derive(Clone, Debug)]
struct Anchor {
    columns: Vec<usize>,
    u: C64,
    point: ZPoint,
    value: CMat,
    recessiveness: f64,
}

/// Canonical solution Y_ν on the sector S_ν, realized by integrating from per-column anchors
/// placed where those columns are recessive.
#[derive(Clone, Debug)]
pub struct CanonicalSolution {
    pub nu: i64,
    pub sector: (f64, f64),
    pub r_match: f64,
    system: CanonicalSystem,
    anchors: Vec<Anchor>,
    opts: IntegrateOptions,
}

fn column_groups(u: &[C64]) -> Vec<Vec<usize>> {
    let scale = u.iter().fold(1.0_f64, |a, z| a.max(z.norm()));
    crate::caustic::cluster_eigenvalues(u, 1e-12 * scale)
}

fn recessiveness(u: &[C64], group: &[usize], alpha: f64) -> f64 {
    let ug = u[group[0]];
    let dir = C64::from_polar(1.0, alpha);
    (0..u.len())
        .filter(|i| !group.contains(i))
        .map(|i| {
            let d = ug - u[i];
            (d * dir).re / d.norm()
        })
        .fold(f64::INFINITY, f64::min)
}

pub fn canonical_solution(
    reduction: &FormalReduction,
    sectors: &SectorConfig,
    nu: i64,
    r_match: f64,
    opts: &IntegrateOptions,
    tail_reject: f64,
) -> Result<CanonicalSolution> {
    let tail = reduction.tail_estimate(r_match);
    if tail > tail_reject {
        return Err(Error::TailTooLarge { estimate: tail, allowed: tail_reject });
    }
    let u = &reduction.system.u;
    let (lo, hi) = sectors.sector(nu);
    let margin = 0.5 * sectors.eps;
    let grid = 720;
    let mut anchors = Vec::new();
    for group in column_groups(u) {
        let (alpha, rec) = if group.len() == u.len() {
            (sectors.phi - FRAC_PI_2 + nu as f64 * PI, f64::INFINITY)
        } else {
            (0..=grid)
                .map(|k| {
                    let a = lo + margin + (hi - lo - 2.0 * margin) * k as f64 / grid as f64;
                    (a, recessiveness(u, &group, a))
                })
                .max_by(|x, y| x.1.total_cmp(&y.1))
                .expect("non-empty grid")
        };
        let point = ZPoint::new(r_match, alpha);
        anchors.push(Anchor {
            u: u[group[0]],
            columns: group,
            point,
            value: reduction.eval_stripped(point),
            recessiveness: rec,
        });
    }
    Ok(CanonicalSolution { nu, sector: (lo, hi), r_match, system: reduction.system.clone(), anchors, opts: *opts })
}

impl CanonicalSolution {
    /// Smallest recessiveness margin over all anchors (negative means a column is not pinned).
    pub fn min_recessiveness(&self) -> f64 {
        self.anchors.iter().map(|a| a.recessiveness).fold(f64::INFINITY, f64::min)
    }

    pub fn eval(&self, target: ZPoint) -> Result<CMat> {
        Ok(self.eval_many(&[target])?.remove(0))
    }

    /// Values at several points; radial legs are shared between targets of equal modulus.
    pub fn eval_many(&self, targets: &[ZPoint]) -> Result<Vec<CMat>> {
        let n = self.system.dim();
        let mut out = vec![CMat::zeros(n, n); targets.len()];
        for anchor in &self.anchors {
            let shift = anchor.u;
            let sys = &self.system;
            let a = |z: C64| {
                let mut m = sys.coefficient(z);
                for i in 0..n {
                    m[(i, i)] += shift;
                }
                m
            };
            let mut radial: Vec<(f64, CMat)> = Vec::new();
            for (slot, t) in targets.iter().enumerate() {
                let w_ray = match radial.iter().find(|(r, _)| *r == t.modulus) {
                    Some((_, w)) => w.clone(),
                    None => {
                        let path = ray_then_arc(anchor.point, ZPoint::new(t.modulus, anchor.point.arg));
                        let w = integrate(a, &path, &anchor.value, &self.opts)?.y;
                        radial.push((t.modulus, w.clone()));
                        w
                    }
                };
                let start = ZPoint::new(t.modulus, anchor.point.arg);
                let path = ray_then_arc(start, *t);
                let w = integrate(a, &path, &w_ray, &self.opts)?.y;
                let factor = (-shift * t.value()).exp();
                for &j in &anchor.columns {
                    for i in 0..n {
                        out[slot][(i, j)] = w[(i, j)] * factor;
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Allowed off-diagonal Stokes entries on the overlap direction θ: (i, j) with u_i ≠ u_j and
/// Re((u_i − u_j)e^{iθ}) > 0.
pub fn dominance_pattern(u: &[C64], theta: f64) -> Vec<Vec<bool>> {
    let n = u.len();
    let scale = u.iter().fold(1.0_f64, |a, z| a.max(z.norm()));
    let dir = C64::from_polar(1.0, theta);
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let d = u[i] - u[j];
                    d.norm() > 1e-12 * scale && (d * dir).re > 0.0
                })
                .collect()
        })
        .collect()
}

/// Largest deviation of a Stokes matrix from its dominance pattern.
pub fn pattern_violation(s: &CMat, allowed: &[Vec<bool>]) -> f64 {
    let n = s.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let dev = if i == j {
                (s[(i, j)] - 1.0).norm()
            } else if allowed[i][j] {
                0.0
            } else {
                s[(i, j)].norm()
            };
            worst = worst.max(dev);
        }
    }
    worst
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StokesEstimate {
    pub nu: i64,
    #[serde(with = "serde_cmat")]
    pub matrix: CMat,
    /// Max entrywise deviation between overlap points.
    pub consistency: f64,
    pub pattern_violation: f64,
    pub det_deviation: f64,
}

/// Five points in S_ν ∩ S_{ν+1} around the admissible direction, on two radii.
pub fn overlap_points(sectors: &SectorConfig, nu: i64, radius: f64) -> Vec<ZPoint> {
    let theta = sectors.overlap_direction(nu);
    let e = sectors.eps;
    vec![
        ZPoint::new(radius, theta - 0.5 * e),
        ZPoint::new(radius, theta),
        ZPoint::new(radius, theta + 0.5 * e),
        ZPoint::new(1.5 * radius, theta - 0.25 * e),
        ZPoint::new(1.5 * radius, theta + 0.25 * e),
    ]
}

/// 𝕊_ν = Y_ν⁻¹ Y_{ν+1} averaged over the overlap points.
pub fn stokes_matrix(
    y_nu: &CanonicalSolution,
    y_next: &CanonicalSolution,
    points: &[ZPoint],
    overlap_tol: f64,
) -> Result<StokesEstimate> {
    let a = y_nu.eval_many(points)?;
    let b = y_next.eval_many(points)?;
    let mut estimates = Vec::with_capacity(points.len());
    for (ya, yb) in a.iter().zip(&b) {
        estimates.push(inverse(ya)? * yb);
    }
    let n = y_nu.system.dim();
    let mut mean = CMat::zeros(n, n);
    for s in &estimates {
        mean += s;
    }
    mean /= real(estimates.len() as f64);
    let mut consistency = 0.0_f64;
    for s in &estimates {
        for t in &estimates {
            consistency = consistency.max(max_abs(&(s - t)));
        }
    }
    if consistency > overlap_tol {
        return Err(Error::InconsistentOverlap { deviation: consistency });
    }
    let theta = points.iter().map(|p| p.arg).sum::<f64>() / points.len() as f64;
    let allowed = dominance_pattern(&y_nu.system.u, theta);
    Ok(StokesEstimate {
        nu: y_nu.nu,
        pattern_violation: pattern_violation(&mean, &allowed),
        det_deviation: (mean.determinant() - 1.0).norm(),
        matrix: mean,
        consistency,
    })
}

/// Continues Y_L once counterclockwise around |z| = r0 starting at arg `arg0`; returns the loop
/// matrix Y_L(z)⁻¹ Y_L(z e^{2πi}) and its distance to e^{2πi(R+S)}.
pub fn monodromy_at_zero(levelt: &LeveltData, r0: f64, arg0: f64, opts: &IntegrateOptions) -> Result<(CMat, f64, f64)> {
    let start = ZPoint::new(r0, arg0);
    let y0 = levelt.eval(start);
    let residue = &levelt.residue;
    let u = &levelt.u;
    let a = |z: C64| residue / z - u;
    let path = [Segment::Arc { radius: r0, from: arg0, to: arg0 + TAU }];
    let run = integrate(a, &path, &y0, opts)?;
    let m_loop = inverse(&y0)? * &run.y;
    let residual = max_abs(&(&m_loop - &levelt.monodromy));
    Ok((m_loop, residual, run.liouville))
}

/// Levelt solution carried from |z| = r0 out to `target` along the ray arg(target).
pub fn levelt_at(levelt: &LeveltData, r0: f64, target: ZPoint, opts: &IntegrateOptions) -> Result<(CMat, f64)> {
    let start = ZPoint::new(r0, target.arg);
    let y0 = levelt.eval(start);
    if r0 == target.modulus {
        return Ok((y0, 0.0));
    }
    let residue = &levelt.residue;
    let u = &levelt.u;
    let a = |z: C64| residue / z - u;
    let run = integrate(a, &[Segment::Ray { arg: target.arg, from: r0, to: target.modulus }], &y0, opts)?;
    Ok((run.y, run.liouville))
}

/// C = Y₀(z)⁻¹ Y_L(z) at `z_match`, with the relative change when matching at z_match/2.
pub fn connection_matrix(
    y0: &CanonicalSolution,
    levelt: &LeveltData,
    z_match: ZPoint,
    r0: f64,
    opts: &IntegrateOptions,
) -> Result<(CMat, f64, f64)> {
    let half = ZPoint::new(0.5 * z_match.modulus, z_match.arg);
    let ys = y0.eval_many(&[z_match, half])?;
    let (yl, l1) = levelt_at(levelt, r0, z_match, opts)?;
    let (yl_half, l2) = levelt_at(levelt, r0, half, opts)?;
    let c = inverse(&ys[0])? * yl;
    let c_half = inverse(&ys[1])? * yl_half;
    let rel = max_abs(&(&c - &c_half)) / max_abs(&c).max(1e-300);
    Ok((c, rel, l1.max(l2)))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MonodromyDiagnostics {
    pub r_match: f64,
    pub tail_estimate: f64,
    pub compare_radius: f64,
    pub levelt_radius: f64,
    /// Max Liouville defect over full-matrix integrations.
    pub liouville: f64,
    /// Max of |det Y_ν(z) e^{(tr U)z} − det H₀| / |det H₀| at evaluated points.
    pub canonical_det: f64,
    /// Relative change of Y₀ when anchored at 1.5·R_match.
    pub anchor_independence: f64,
    /// Relative change of C between z_match and z_match/2.
    pub connection_radius: f64,
    /// max |M_loop − e^{2πi(R+S)}|
    pub levelt_loop: f64,
    /// max |(Y₀ loop matrix) − C M̃ C⁻¹| relative to the loop matrix.
    pub loop_consistency: f64,
    /// Spectral distance of the Y₀ loop matrix to {e^{2πiμ}}.
    pub loop_spectrum: f64,
    pub stokes_consistency: f64,
    pub stokes_pattern: f64,
    pub stokes_det: f64,
    /// Least recessiveness margin of any anchor direction.
    pub anchor_margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonodromyData {
    pub system: CanonicalSystem,
    pub b_exp: Vec<C64>,
    pub sectors: SectorConfig,
    pub stokes: Vec<StokesEstimate>,
    pub levelt: LeveltData,
    #[serde(with = "serde_cmat")]
    pub connection: CMat,
    /// Loop matrix of Y_L around z = 0 from numerical continuation.
    #[serde(with = "serde_cmat")]
    pub monodromy_zero: CMat,
    /// Loop matrix of Y₀ around z = 0.
    #[serde(with = "serde_cmat")]
    pub loop_y0: CMat,
    pub diagnostics: MonodromyDiagnostics,
}

impl MonodromyData {
    pub fn stokes_matrix(&self, nu: i64) -> Option<&CMat> {
        self.stokes.iter().find(|s| s.nu == nu).map(|s| &s.matrix)
    }

    pub fn monodromy_spectrum(&self) -> Result<Vec<C64>> {
        eigenvalues(&self.levelt.monodromy)
    }
}

fn max_gap(u: &[C64]) -> f64 {
    let mut g = 0.0_f64;
    for a in u {
        for b in u {
            g = g.max((a - b).norm());
        }
    }
    g
}

fn det_defect(y: &CMat, u: &[C64], z: C64, reference: C64) -> f64 {
    let tr: C64 = u.iter().sum();
    (y.determinant() * (tr * z).exp() - reference).norm() / reference.norm()
}

/// Full monodromy data of dY/dz = (V/z − U)Y.
pub fn compute_monodromy(system: &CanonicalSystem, cfg: &MonodromyConfig) -> Result<MonodromyData> {
    let n = system.dim();
    let reduction = FormalReduction::with_h0_phase(system, cfg.order, cfg.h0_phase)?;
    let sectors = match cfg.phi {
        Some(phi) => SectorConfig::with_phi(&system.u, phi)
            .ok_or_else(|| Error::InvalidSpec(format!("angle {phi} is not admissible")))?,
        None => SectorConfig::from_eigenvalues(&system.u),
    };
    let r_match = reduction.matching_radius(cfg.tail_target, 4.0, 400.0, cfg.tail_reject)?;
    let opts = &cfg.integrate;
    let gap = max_gap(&system.u);
    let r_cmp = if gap > 0.0 { cfg.compare_scale / gap } else { 1.0 };
    let u_norm = system.u.iter().fold(0.0_f64, |a, z| a.max(z.norm()));
    let r0 = (0.5 / u_norm.max(1e-300)).min(0.5 * r_cmp);

    let sols: Vec<CanonicalSolution> = (0..=2)
        .map(|nu| canonical_solution(&reduction, &sectors, nu, r_match, opts, cfg.tail_reject))
        .collect::<Result<_>>()?;
    let det_h0 = reduction.h0.determinant();

    let mut stokes = Vec::new();
    let mut canonical_det = 0.0_f64;
    for nu in 0..=1 {
        let pts = overlap_points(&sectors, nu, r_cmp);
        let est = stokes_matrix(&sols[nu as usize], &sols[nu as usize + 1], &pts, cfg.overlap_tol)?;
        for (p, y) in pts.iter().zip(sols[nu as usize].eval_many(&pts)?) {
            canonical_det = canonical_det.max(det_defect(&y, &system.u, p.value(), det_h0));
        }
        stokes.push(est);
    }

    let levelt = match &cfg.levelt_t0 {
        Some(t0) => crate::series::levelt_solution_with_t0(&system.v, &system.u_matrix(), cfg.k_levelt, t0)?,
        None => crate::series::levelt_solution(&system.v, &system.u_matrix(), cfg.k_levelt)?,
    };
    let (m_loop, levelt_loop, l_loop) = monodromy_at_zero(&levelt, r0, sectors.phi, opts)?;

    let z_match = ZPoint::new(r_cmp, sectors.phi);
    let (connection, connection_radius, l_conn) = connection_matrix(&sols[0], &levelt, z_match, r0, opts)?;

    let y0_m = sols[0].eval(z_match)?;
    let moved = canonical_solution(&reduction, &sectors, 0, 1.5 * r_match, opts, cfg.tail_reject)?;
    let anchor_independence = max_abs(&(moved.eval(z_match)? - &y0_m)) / max_abs(&y0_m);

    let loop_run = integrate(
        |z| system.coefficient(z),
        &[Segment::Arc { radius: z_match.modulus, from: z_match.arg, to: z_match.arg + TAU }],
        &y0_m,
        opts,
    )?;
    let loop_y0 = inverse(&y0_m)? * &loop_run.y;
    let predicted = &connection * &levelt.monodromy * inverse(&connection)?;
    let loop_consistency = max_abs(&(&loop_y0 - &predicted)) / max_abs(&loop_y0).max(1.0);
    let loop_spectrum = spectrum_distance(&eigenvalues(&loop_y0)?, &levelt.monodromy_eigenvalues());

    let diagnostics = MonodromyDiagnostics {
        r_match,
        tail_estimate: reduction.tail_estimate(r_match),
        compare_radius: r_cmp,
        levelt_radius: r0,
        liouville: l_loop.max(l_conn).max(loop_run.liouville),
        canonical_det,
        anchor_independence,
        connection_radius,
        levelt_loop,
        loop_consistency,
        loop_spectrum,
        stokes_consistency: stokes.iter().map(|s| s.consistency).fold(0.0, f64::max),
        stokes_pattern: stokes.iter().map(|s| s.pattern_violation).fold(0.0, f64::max),
        stokes_det: stokes.iter().map(|s| s.det_deviation).fold(0.0, f64::max),
        anchor_margin: sols.iter().map(CanonicalSolution::min_recessiveness).fold(f64::INFINITY, f64::min),
    };
    debug_assert_eq!(m_loop.nrows(), n);
    Ok(MonodromyData {
        system: system.clone(),
        b_exp: reduction.b_exp.clone(),
        sectors,
        stokes,
        levelt,
        connection,
        monodromy_zero: m_loop,
        loop_y0,
        diagnostics,
    })
}

/// e^{2πi X} via the matrix exponential, for tests and oracles.
pub fn exp_2pi_i(x: &CMat) -> CMat {
    (x * (I * TAU)).exp()
}
