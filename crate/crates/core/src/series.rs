//! Formal reduction of dY/dz = (V/z − U)Y at z = ∞ and the Levelt solution at z = 0.

use serde::{Deserialize, Serialize};

use crate::caustic::cluster_eigenvalues;
use crate::error::{Error, Result};
use crate::linalg::{
    commutator, eigenvalues, identity, inverse, max_abs, real, serde_cmat, serde_cmat_vec, CMat, CVec, C64, I,
};

/// A point on the universal cover of ℂ*, so that powers and logarithms keep track of branches.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZPoint {
    pub modulus: f64,
    pub arg: f64,
}

impl ZPoint {
    pub fn new(modulus: f64, arg: f64) -> Self {
        ZPoint { modulus, arg }
    }

    pub fn value(&self) -> C64 {
        C64::from_polar(self.modulus, self.arg)
    }

    pub fn ln(&self) -> C64 {
        C64::new(self.modulus.ln(), self.arg)
    }

    /// z^b on this branch.
    pub fn pow(&self, b: C64) -> C64 {
        (b * self.ln()).exp()
    }
}

/// The system dY/dz = (V/z − U)Y with U = diag(u).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CanonicalSystem {
    pub u: Vec<C64>,
    #[serde(with = "serde_cmat")]
    pub v: CMat,
}

impl CanonicalSystem {
    pub fn new(u: Vec<C64>, v: CMat) -> Result<Self> {
        if v.nrows() != u.len() || v.ncols() != u.len() {
            return Err(Error::ArityMismatch { expected: u.len(), found: v.nrows() });
        }
        Ok(CanonicalSystem { u, v })
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }

    pub fn u_matrix(&self) -> CMat {
        crate::linalg::diag(&self.u)
    }

    /// Coefficient matrix V/z − U.
    pub fn coefficient(&self, z: C64) -> CMat {
        let mut a = &self.v / z;
        for i in 0..self.dim() {
            a[(i, i)] -= self.u[i];
        }
        a
    }

    fn scale(&self) -> f64 {
        self.u.iter().fold(1.0_f64, |a, z| a.max(z.norm()))
    }

    /// True when u₀ = u₁ is the leading double eigenvalue.
    pub fn has_double(&self) -> bool {
        self.dim() >= 2 && (self.u[0] - self.u[1]).norm() <= 1e-12 * self.scale()
    }

    fn in_block(&self, i: usize, j: usize) -> bool {
        i == j || (self.has_double() && i < 2 && j < 2)
    }
}

fn check_spectrum(sys: &CanonicalSystem) -> Result<()> {
    let n = sys.dim();
    for i in 0..n {
        for j in 0..n {
            if !sys.in_block(i, j) {
                let gap = (sys.u[i] - sys.u[j]).norm();
                if gap < 1e-10 {
                    return Err(Error::SmallDivisor { i, j, gap });
                }
            }
        }
    }
    Ok(())
}

/// G₀ = Id, G₁..G_{kg} and B₁..B_{kb} (index 0 of `b` is unused and zero).
fn gauge_recursion(sys: &CanonicalSystem, kg: usize, kb: usize) -> Result<(Vec<CMat>, Vec<CMat>)> {
    check_spectrum(sys)?;
    let n = sys.dim();
    let mut g = vec![identity(n)];
    let mut b = vec![CMat::zeros(n, n)];
    for k in 1..=kb.max(kg) {
        let prev = &g[k - 1];
        let mut rhs = prev * real((k - 1) as f64) + &sys.v * prev;
        for s in 1..k {
            rhs -= &g[k - s] * &b[s];
        }
        let mut gk = CMat::zeros(n, n);
        let mut bk = CMat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if sys.in_block(i, j) {
                    bk[(i, j)] = rhs[(i, j)];
                } else {
                    gk[(i, j)] = rhs[(i, j)] / (sys.u[i] - sys.u[j]);
                }
            }
        }
        if k <= kb {
            b.push(bk);
        }
        if k <= kg {
            g.push(gk);
        } else {
            break;
        }
    }
    Ok((g, b))
}

/// Returns (G₁..G_K, B₁..B_K) solving −[U, G_k] + (k−1)G_{k−1} + V G_{k−1} − Σ G_{k−s}B_s − B_k = 0.
pub fn block_diagonalize_formal(u: &[C64], v: &CMat, k: usize) -> Result<(Vec<CMat>, Vec<CMat>)> {
    let sys = CanonicalSystem::new(u.to_vec(), v.clone())?;
    let (g, b) = gauge_recursion(&sys, k, k)?;
    Ok((g[1..].to_vec(), b[1..].to_vec()))
}

/// Fixed eigenbasis (1/√2)[[1, 1], [i, −i]] of [[0, V¹₂], [−V¹₂, 0]] and the exponents (iV¹₂, −iV¹₂).
pub fn diagonalize_residue(v12: C64) -> Result<(CMat, [C64; 2])> {
    if v12.norm() < 1e-14 {
        return Err(Error::ZeroResidue);
    }
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let h = CMat::from_row_slice(2, 2, &[real(r), real(r), I * r, -I * r]);
    Ok((h, [I * v12, -I * v12]))
}

/// Solves [B, H_k] + k H_k = −B̂_{k+1} − Σ_{l=1}^{k−1} B̂_{k+1−l} H_l entrywise.
///
/// `b_hat` holds B̂₁..B̂_{K+1} (index 0 unused); B̂₁ must be diagonal.
pub fn reduce_to_euler_form(b_hat: &[CMat], k_max: usize) -> Result<Vec<CMat>> {
    let n = b_hat[1].nrows();
    let bd: Vec<C64> = (0..n).map(|i| b_hat[1][(i, i)]).collect();
    let mut h = vec![identity(n)];
    for k in 1..=k_max {
        let mut rhs = -b_hat[k + 1].clone();
        for l in 1..k {
            rhs -= &b_hat[k + 1 - l] * &h[l];
        }
        let mut hk = CMat::zeros(n, n);
        for a in 0..n {
            for b in 0..n {
                if rhs[(a, b)] == real(0.0) {
                    continue;
                }
                let div = bd[a] - bd[b] + k as f64;
                if div.norm() < 1e-12 {
                    return Err(Error::ResonantResidue { a, b, k });
                }
                hk[(a, b)] = rhs[(a, b)] / div;
            }
        }
        h.push(hk);
    }
    Ok(h[1..].to_vec())
}

/// Truncated formal solution Y_F = G(z) H₀ Ĥ(z) z^B e^{−Uz} at z = ∞.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormalReduction {
    pub system: CanonicalSystem,
    pub order: usize,
    /// G₁..G_K
    #[serde(with = "serde_cmat_vec")]
    pub g: Vec<CMat>,
    /// B₁..B_{K+1}
    #[serde(with = "serde_cmat_vec")]
    pub b: Vec<CMat>,
    #[serde(with = "serde_cmat")]
    pub h0: CMat,
    /// H₁..H_K
    #[serde(with = "serde_cmat_vec")]
    pub h: Vec<CMat>,
    pub b_exp: Vec<C64>,
    /// Laurent coefficients P₀..P_{2K} of P = G H₀ Ĥ.
    #[serde(with = "serde_cmat_vec")]
    pub p: Vec<CMat>,
}

impl FormalReduction {
    pub fn new(system: &CanonicalSystem, order: usize) -> Result<Self> {
        Self::with_h0_phase(system, order, real(0.0))
    }

    /// Uses H₀ = H₀_block·diag(e^{−iθ}, e^{iθ}) ⊕ Id, the transported flat choice along a caustic.
    pub fn with_h0_phase(system: &CanonicalSystem, order: usize, theta: C64) -> Result<Self> {
        let n = system.dim();
        let (g_full, b_full) = gauge_recursion(system, order, order + 1)?;
        let mut h0 = identity(n);
        let mut b_exp = vec![real(0.0); n];
        if system.has_double() {
            let (blk, ex) = diagonalize_residue(b_full[1][(0, 1)])?;
            let phase = [(-I * theta).exp(), (I * theta).exp()];
            for i in 0..2 {
                for j in 0..2 {
                    h0[(i, j)] = blk[(i, j)] * phase[j];
                }
            }
            b_exp[0] = ex[0];
            b_exp[1] = ex[1];
        }
        for i in 0..n {
            if !(system.has_double() && i < 2) {
                b_exp[i] = b_full[1][(i, i)];
            }
        }
        let h0_inv = inverse(&h0)?;
        let b_hat: Vec<CMat> = b_full.iter().map(|bk| &h0_inv * bk * &h0).collect();
        let mut b_hat_clean = b_hat.clone();
        // B̂₁ is diagonal up to rounding; use the exact exponent.
        b_hat_clean[1] = crate::linalg::diag(&b_exp);
        let h = reduce_to_euler_form(&b_hat_clean, order)?;

        let mut hh = vec![identity(n)];
        hh.extend(h.iter().cloned());
        let mut p = vec![CMat::zeros(n, n); 2 * order + 1];
        for (i, gi) in g_full.iter().enumerate() {
            let gh0 = gi * &h0;
            for (j, hj) in hh.iter().enumerate() {
                p[i + j] += &gh0 * hj;
            }
        }
        Ok(FormalReduction {
            system: system.clone(),
            order,
            g: g_full[1..].to_vec(),
            b: b_full[1..].to_vec(),
            h0,
            h,
            b_exp,
            p,
        })
    }

    pub fn dim(&self) -> usize {
        self.system.dim()
    }

    /// P(z) = Σ P_k z^{−k}.
    pub fn prefactor(&self, z: C64) -> CMat {
        let w = z.inv();
        let mut acc = CMat::zeros(self.dim(), self.dim());
        for pk in self.p.iter().rev() {
            acc = acc * w + pk;
        }
        acc
    }

    /// P(z) z^B, the formal solution without the exponential factor.
    pub fn eval_stripped(&self, z: ZPoint) -> CMat {
        let mut out = self.prefactor(z.value());
        for (j, b) in self.b_exp.iter().enumerate() {
            let f = z.pow(*b);
            for i in 0..self.dim() {
                out[(i, j)] *= f;
            }
        }
        out
    }

    pub fn eval(&self, z: ZPoint) -> CMat {
        let zv = z.value();
        let mut out = self.eval_stripped(z);
        for (j, u) in self.system.u.iter().enumerate() {
            let f = (-u * zv).exp();
            for i in 0..self.dim() {
                out[(i, j)] *= f;
            }
        }
        out
    }

    /// Laurent coefficients Q₀..Q_{2K+1} of Q = P′ + P(B/z − U) − (V/z − U)P.
    pub fn residual_coefficients(&self) -> Vec<CMat> {
        let n = self.dim();
        let u = self.system.u_matrix();
        let b = crate::linalg::diag(&self.b_exp);
        let zero = CMat::zeros(n, n);
        (0..=self.p.len())
            .map(|k| {
                let pk = self.p.get(k).unwrap_or(&zero);
                let mut q = commutator(&u, pk);
                if k >= 1 {
                    let prev = &self.p[k - 1];
                    q += prev * real(-((k as f64) - 1.0)) + prev * &b - &self.system.v * prev;
                }
                q
            })
            .collect()
    }

    /// ‖(Y_F′ − (V/z − U)Y_F) Y_F⁻¹‖ = ‖Q P⁻¹‖ (Frobenius norm).
    pub fn residual(&self, z: C64) -> Result<f64> {
        let w = z.inv();
        let mut q = CMat::zeros(self.dim(), self.dim());
        for qk in self.residual_coefficients().iter().rev() {
            q = q * w + qk;
        }
        Ok((q * inverse(&self.prefactor(z))?).norm())
    }

    /// ‖G_K‖/R^K and ‖H_K‖/R^K, whichever is larger.
    pub fn tail_estimate(&self, radius: f64) -> f64 {
        let k = self.order as i32;
        let gk = self.g.last().map_or(0.0, max_abs);
        let hk = self.h.last().map_or(0.0, max_abs);
        gk.max(hk) / radius.powi(k)
    }

    /// Smallest radius on a log grid in [r_min, r_max] whose tail estimate is at most `target`.
    pub fn matching_radius(&self, target: f64, r_min: f64, r_max: f64, reject_above: f64) -> Result<f64> {
        let steps = 200;
        let mut best = (r_max, self.tail_estimate(r_max));
        for i in 0..=steps {
            let r = r_min * (r_max / r_min).powf(i as f64 / steps as f64);
            let t = self.tail_estimate(r);
            if t <= target {
                return Ok(r);
            }
            if t < best.1 {
                best = (r, t);
            }
        }
        if best.1 > reject_above {
            return Err(Error::TailTooLarge { estimate: best.1, allowed: reject_above });
        }
        Ok(best.0)
    }
}

/// Levelt normal form Y_L = T(z) z^D z^{R+S} at z = 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeveltData {
    #[serde(with = "serde_cmat")]
    pub residue: CMat,
    #[serde(with = "serde_cmat")]
    pub u: CMat,
    /// T₀..T_p
    #[serde(with = "serde_cmat_vec")]
    pub t: Vec<CMat>,
    /// Diagonal of J = T₀⁻¹ residue T₀.
    pub j: Vec<C64>,
    pub d: Vec<i64>,
    pub s: Vec<C64>,
    /// R₁..R_p
    #[serde(with = "serde_cmat_vec")]
    pub r_k: Vec<CMat>,
    #[serde(with = "serde_cmat")]
    pub r: CMat,
    #[serde(with = "serde_cmat")]
    pub monodromy: CMat,
    /// max |T₀⁻¹ residue T₀ − J|
    pub diagonalization_residual: f64,
}

const RESONANCE_TOL: f64 = 1e-10;

/// Eigenvector matrix of a diagonalizable matrix, columns ordered by eigenvalue and scaled to a
/// unit first non-negligible entry.
fn eigenbasis(a: &CMat) -> Result<CMat> {
    let n = a.nrows();
    let ev = eigenvalues(a)?;
    let scale = max_abs(a).max(1.0);
    let mut cols: Vec<CVec> = Vec::with_capacity(n);
    for group in cluster_eigenvalues(&ev, 1e-9 * scale) {
        let mean: C64 = group.iter().map(|&i| ev[i]).sum::<C64>() / group.len() as f64;
        let shifted = a - identity(n) * mean;
        let svd = shifted.svd(false, true);
        let v_t = svd.v_t.ok_or(Error::NonDiagonalizableResidue)?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&x, &y| svd.singular_values[x].total_cmp(&svd.singular_values[y]));
        if svd.singular_values[order[group.len() - 1]] > 1e-7 * scale {
            return Err(Error::NonDiagonalizableResidue);
        }
        for &idx in order.iter().take(group.len()) {
            cols.push(v_t.row(idx).transpose().map(|z| z.conj()));
        }
    }
    let t0 = CMat::from_columns(&cols);
    if crate::linalg::singular_values(&t0)[0] < 1e-8 {
        return Err(Error::NonDiagonalizableResidue);
    }
    Ok(normalize_columns(&t0))
}

/// Scales each column so its first entry above 1e−8 of the column norm equals 1.
pub fn normalize_columns(t0: &CMat) -> CMat {
    let mut out = t0.clone();
    for j in 0..out.ncols() {
        let norm = out.column(j).norm();
        if let Some(pivot) = out.column(j).iter().copied().find(|z| z.norm() > 1e-8 * norm) {
            for i in 0..out.nrows() {
                out[(i, j)] /= pivot;
            }
        }
    }
    out
}

pub fn levelt_solution(residue: &CMat, u: &CMat, k_levelt: usize) -> Result<LeveltData> {
    let t0 = eigenbasis(residue)?;
    levelt_solution_with_t0(residue, u, k_levelt, &t0)
}

/// Levelt solution with a prescribed eigenvector matrix T₀ of the residue.
pub fn levelt_solution_with_t0(residue: &CMat, u: &CMat, k_levelt: usize, t0: &CMat) -> Result<LeveltData> {
    let n = residue.nrows();
    let t0_inv = inverse(t0).map_err(|_| Error::NonDiagonalizableResidue)?;
    let jm = &t0_inv * residue * t0;
    let j: Vec<C64> = (0..n).map(|i| jm[(i, i)]).collect();
    let diagonalization_residual = max_abs(&(&jm - crate::linalg::diag(&j)));
    if diagonalization_residual > 1e-8 * max_abs(residue).max(1.0) {
        return Err(Error::NonDiagonalizableResidue);
    }
    let d: Vec<i64> = j.iter().map(|x| (x.re + RESONANCE_TOL).floor() as i64).collect();
    let s: Vec<C64> = j.iter().zip(&d).map(|(x, di)| x - *di as f64).collect();

    let mut x = vec![identity(n)];
    let mut t = vec![t0.clone()];
    let mut r_k: Vec<CMat> = vec![CMat::zeros(n, n)];
    for k in 1..=k_levelt {
        let mut w = &t0_inv * u * &t[k - 1];
        for l in 1..k {
            w += &x[l] * &r_k[k - l];
        }
        let mut xk = CMat::zeros(n, n);
        let mut rk = CMat::zeros(n, n);
        for a in 0..n {
            for b in 0..n {
                let div = j[a] - j[b] - k as f64;
                if div.norm() < RESONANCE_TOL {
                    rk[(a, b)] = -w[(a, b)];
                } else {
                    xk[(a, b)] = w[(a, b)] / div;
                }
            }
        }
        t.push(t0 * &xk);
        x.push(xk);
        r_k.push(rk);
    }
    let r_k = r_k[1..].to_vec();
    let mut r = CMat::zeros(n, n);
    for rk in &r_k {
        r += rk;
    }
    let exponent = (&r + crate::linalg::diag(&s)) * (I * 2.0 * std::f64::consts::PI);
    let monodromy = exponent.exp();
    Ok(LeveltData { residue: residue.clone(), u: u.clone(), t, j, d, s, r_k, r, monodromy, diagonalization_residual })
}

impl LeveltData {
    pub fn dim(&self) -> usize {
        self.residue.nrows()
    }

    /// T(z) = Σ T_k z^k.
    pub fn gauge(&self, z: C64) -> CMat {
        let mut acc = CMat::zeros(self.dim(), self.dim());
        for tk in self.t.iter().rev() {
            acc = acc * z + tk;
        }
        acc
    }

    /// z^D z^{R+S} on the branch of `z`.
    pub fn normal_form(&self, z: ZPoint) -> CMat {
        let n = self.dim();
        let zd = CMat::from_fn(n, n, |i, j| if i == j { z.pow(real(self.d[i] as f64)) } else { real(0.0) });
        let e = ((&self.r + crate::linalg::diag(&self.s)) * z.ln()).exp();
        zd * e
    }

    pub fn eval(&self, z: ZPoint) -> CMat {
        self.gauge(z.value()) * self.normal_form(z)
    }

    /// ‖(T′ + T·(J + Σ R_k z^k)/z − (residue/z − U)T) T⁻¹‖, the ODE defect of the truncated Y_L.
    pub fn residual(&self, z: C64) -> Result<f64> {
        let n = self.dim();
        let t = self.gauge(z);
        let mut dt = CMat::zeros(n, n);
        for (k, tk) in self.t.iter().enumerate().skip(1).rev() {
            dt = dt * z + tk * real(k as f64);
        }
        let mut rz = crate::linalg::diag(&self.j);
        let mut zk = real(1.0);
        for rk in &self.r_k {
            zk *= z;
            rz += rk * zk;
        }
        let defect = dt + &t * rz / z - (&self.residue / z - &self.u) * &t;
        Ok((defect * inverse(&t)?).norm())
    }

    pub fn monodromy_eigenvalues(&self) -> Vec<C64> {
        self.j.iter().map(|m| (I * 2.0 * std::f64::consts::PI * m).exp()).collect()
    }
}
