//! Frobenius structure of a polynomial potential in flat coordinates.

use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{inverse, max_abs, real, CMat, CVec, C64};
use crate::poly::MultiPoly;

/// Geometric input: potential, Euler field, charge and unit direction.
#[derive(Clone, Debug, PartialEq)]
pub struct ManifoldSpec {
    pub names: Vec<String>,
    pub potential: MultiPoly,
    /// Weights d_i in E = Σ (d_i t_i + r_i) ∂_i.
    pub euler_linear: Vec<Rational64>,
    /// Constants r_i.
    pub euler_affine: Vec<C64>,
    pub charge: Rational64,
    pub unit_index: usize,
}

impl ManifoldSpec {
    pub fn new(
        names: Vec<String>,
        potential: MultiPoly,
        euler_linear: Vec<Rational64>,
        euler_affine: Vec<C64>,
        charge: Rational64,
        unit_index: usize,
    ) -> Result<Self> {
        let n = potential.num_vars();
        if n == 0 {
            return Err(Error::InvalidSpec("dimension must be positive".into()));
        }
        if names.len() != n {
            return Err(Error::ArityMismatch { expected: n, found: names.len() });
        }
        if euler_linear.len() != n {
            return Err(Error::ArityMismatch { expected: n, found: euler_linear.len() });
        }
        if euler_affine.len() != n {
            return Err(Error::ArityMismatch { expected: n, found: euler_affine.len() });
        }
        if unit_index >= n {
            return Err(Error::IndexOutOfRange { index: unit_index, len: n });
        }
        if euler_linear[unit_index] != Rational64::from_integer(1) {
            return Err(Error::InvalidSpec("the unit direction must have Euler weight 1".into()));
        }
        Ok(ManifoldSpec { names, potential, euler_linear, euler_affine, charge, unit_index })
    }

    pub fn dim(&self) -> usize {
        self.potential.num_vars()
    }

    pub fn weights_f64(&self) -> Vec<f64> {
        self.euler_linear.iter().map(|w| w.to_f64().unwrap_or(f64::NAN)).collect()
    }

    /// Euler vector field at `p`.
    pub fn euler_vector(&self, p: &[C64]) -> CVec {
        let w = self.weights_f64();
        CVec::from_fn(self.dim(), |i, _| p[i] * w[i] + self.euler_affine[i])
    }
}

fn third_derivatives(spec: &ManifoldSpec) -> Result<Vec<MultiPoly>> {
    let n = spec.dim();
    let mut first = Vec::with_capacity(n);
    for i in 0..n {
        first.push(spec.potential.partial(i)?);
    }
    let mut out = Vec::with_capacity(n * n * n);
    for fs in &first {
        for i in 0..n {
            let fsi = fs.partial(i)?;
            for j in 0..n {
                out.push(fsi.partial(j)?);
            }
        }
    }
    Ok(out)
}

/// Constant metric η_ij = ∂_e ∂_i ∂_j F.
pub fn metric(spec: &ManifoldSpec) -> Result<CMat> {
    let n = spec.dim();
    let fe = spec.potential.partial(spec.unit_index)?;
    let mut eta = CMat::zeros(n, n);
    for i in 0..n {
        let fi = fe.partial(i)?;
        for j in 0..n {
            let fij = fi.partial(j)?;
            if !fij.is_constant() {
                return Err(Error::NonConstantMetric { i, j });
            }
            eta[(i, j)] = fij.constant_term();
        }
    }
    Ok(eta)
}

/// Exact diagonal of μ = ((2 − d)/2)·Id − diag(d_i).
pub fn mu_diagonal(spec: &ManifoldSpec) -> Vec<Rational64> {
    let half = (Rational64::from_integer(2) - spec.charge) / Rational64::from_integer(2);
    spec.euler_linear.iter().map(|w| half - w).collect()
}

/// Grading operator μ, checked for η-antisymmetry.
pub fn mu_matrix(spec: &ManifoldSpec) -> Result<CMat> {
    let eta = metric(spec)?;
    mu_checked(spec, &eta)
}

fn mu_checked(spec: &ManifoldSpec, eta: &CMat) -> Result<CMat> {
    let d: Vec<C64> = mu_diagonal(spec).iter().map(|q| real(q.to_f64().unwrap_or(f64::NAN))).collect();
    let mu = crate::linalg::diag(&d);
    let em = eta * &mu;
    let residual = max_abs(&(&em + em.transpose()));
    if residual > 1e-12 {
        return Err(Error::MuNotAntisymmetric { residual });
    }
    Ok(mu)
}

/// A spec with its constant tensors and third-derivative polynomials precomputed.
#[derive(Clone, Debug)]
pub struct FrobeniusManifold {
    spec: ManifoldSpec,
    eta: CMat,
    eta_inv: CMat,
    mu: CMat,
    /// F_sij flattened as (s·n + i)·n + j.
    third: Vec<MultiPoly>,
}

impl FrobeniusManifold {
    pub fn new(spec: ManifoldSpec) -> Result<Self> {
        let eta = metric(&spec)?;
        let eta_inv = inverse(&eta).map_err(|_| Error::SingularMetric)?;
        let mu = mu_checked(&spec, &eta)?;
        let third = third_derivatives(&spec)?;
        Ok(FrobeniusManifold { spec, eta, eta_inv, mu, third })
    }

    pub fn spec(&self) -> &ManifoldSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn eta(&self) -> &CMat {
        &self.eta
    }

    pub fn eta_inv(&self) -> &CMat {
        &self.eta_inv
    }

    pub fn mu(&self) -> &CMat {
        &self.mu
    }

    pub fn unit(&self) -> CVec {
        let mut e = CVec::zeros(self.dim());
        e[self.spec.unit_index] = real(1.0);
        e
    }

    /// c^k_ij at `p`, flattened as (k·n + i)·n + j.
    pub fn structure_constants(&self, p: &[C64]) -> Result<Vec<C64>> {
        let n = self.dim();
        if p.len() != n {
            return Err(Error::ArityMismatch { expected: n, found: p.len() });
        }
        let mut lower = vec![C64::zero(); n * n * n];
        for (slot, f) in lower.iter_mut().zip(&self.third) {
            *slot = f.eval(p)?;
        }
        let mut c = vec![C64::zero(); n * n * n];
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut acc = C64::zero();
                    for s in 0..n {
                        acc += self.eta_inv[(k, s)] * lower[(s * n + i) * n + j];
                    }
                    c[(k * n + i) * n + j] = acc;
                }
            }
        }
        Ok(c)
    }

    pub fn at(&self, p: &[C64]) -> Result<PointAlgebra> {
        let c = self.structure_constants(p)?;
        let n = self.dim();
        let euler = self.spec.euler_vector(p);
        let mut alg = PointAlgebra {
            point: CVec::from_column_slice(p),
            eta: self.eta.clone(),
            eta_inv: self.eta_inv.clone(),
            c,
            u: CMat::zeros(n, n),
            mu: self.mu.clone(),
            unit_index: self.spec.unit_index,
        };
        alg.u = alg.mult_matrix(&euler);
        Ok(alg)
    }

    pub fn mult_matrix(&self, p: &[C64], v: &CVec) -> Result<CMat> {
        Ok(self.at(p)?.mult_matrix(v))
    }

    /// Multiplication by the Euler field at `p`.
    pub fn euler_mult(&self, p: &[C64]) -> Result<CMat> {
        Ok(self.at(p)?.u)
    }

    /// Point reached by the flow of E for time ln λ.
    pub fn euler_flow(&self, p: &[C64], lambda: f64) -> Vec<C64> {
        let tau = lambda.ln();
        let w = self.spec.weights_f64();
        p.iter()
            .enumerate()
            .map(|(a, x)| {
                let r = self.spec.euler_affine[a];
                if w[a] == 0.0 {
                    x + r * tau
                } else {
                    (x + r / w[a]) * (w[a] * tau).exp() - r / w[a]
                }
            })
            .collect()
    }

    pub fn verify_axioms(&self, points: &[Vec<C64>], tol: f64) -> Result<AxiomReport> {
        let n = self.dim();
        let w = self.spec.weights_f64();
        let mut fourth = Vec::with_capacity(n * self.third.len());
        for a in 0..n {
            for f in &self.third {
                fourth.push(f.partial(a)?);
            }
        }
        let two_minus_d = 2.0 - self.spec.charge.to_f64().unwrap_or(f64::NAN);
        let mut euler_metric = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                let r = (w[i] + w[j] - two_minus_d) * self.eta[(i, j)].norm();
                euler_metric = euler_metric.max(r.abs());
            }
        }

        let mut per_point = Vec::with_capacity(points.len());
        for p in points {
            let alg = self.at(p)?;
            let cc = &alg.c;
            let idx = |k: usize, i: usize, j: usize| (k * n + i) * n + j;
            let cmax = cc.iter().fold(1.0_f64, |m, z| m.max(z.norm()));

            let mut comm = 0.0_f64;
            let mut unit = 0.0_f64;
            let mut compat = 0.0_f64;
            let mut assoc = 0.0_f64;
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        comm = comm.max((cc[idx(k, i, j)] - cc[idx(k, j, i)]).norm());
                        let delta = if k == j { 1.0 } else { 0.0 };
                        unit = unit.max((cc[idx(k, self.spec.unit_index, j)] - delta).norm());
                        let mut lhs = C64::zero();
                        let mut rhs = C64::zero();
                        for l in 0..n {
                            lhs += cc[idx(l, i, j)] * self.eta[(l, k)];
                            rhs += self.eta[(i, l)] * cc[idx(l, j, k)];
                        }
                        compat = compat.max((lhs - rhs).norm());
                        for l in 0..n {
                            let mut acc = C64::zero();
                            for m in 0..n {
                                acc += cc[idx(m, i, j)] * cc[idx(l, m, k)] - cc[idx(m, j, k)] * cc[idx(l, m, i)];
                            }
                            assoc = assoc.max(acc.norm());
                        }
                    }
                }
            }

            // E(c^k_ij) = (1 + d_k − d_i − d_j) c^k_ij, by derivatives and by the Euler flow.
            let e = self.spec.euler_vector(p);
            let mut lower_e = vec![C64::zero(); n * n * n];
            for a in 0..n {
                for (t, slot) in lower_e.iter_mut().enumerate() {
                    *slot += e[a] * fourth[a * n * n * n + t].eval(p)?;
                }
            }
            let mut qh_derivative = 0.0_f64;
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        let mut ec = C64::zero();
                        for s in 0..n {
                            ec += self.eta_inv[(k, s)] * lower_e[(s * n + i) * n + j];
                        }
                        let pred = cc[idx(k, i, j)] * (1.0 + w[k] - w[i] - w[j]);
                        qh_derivative = qh_derivative.max((ec - pred).norm());
                    }
                }
            }
            let mut qh_scaling = 0.0_f64;
            for lambda in [0.5, 1.7] {
                let q = self.euler_flow(p, lambda);
                let cq = self.structure_constants(&q)?;
                for k in 0..n {
                    for i in 0..n {
                        for j in 0..n {
                            let pred = cc[idx(k, i, j)] * lambda.powf(1.0 + w[k] - w[i] - w[j]);
                            let scale = 1.0_f64.max(pred.norm());
                            qh_scaling = qh_scaling.max((cq[idx(k, i, j)] - pred).norm() / scale);
                        }
                    }
                }
            }

            let eu = &alg.eta * &alg.u;
            let u_symmetry = max_abs(&(&eu - eu.transpose()));

            per_point.push(PointResiduals {
                point: p.clone(),
                commutativity: comm / cmax,
                associativity: assoc / (cmax * cmax),
                compatibility: compat / cmax,
                unit,
                quasi_homogeneity: (qh_derivative / cmax).max(qh_scaling),
                u_symmetry: u_symmetry / cmax,
            });
        }

        let mut max = MaxResiduals { euler_metric, ..MaxResiduals::default() };
        for r in &per_point {
            max.commutativity = max.commutativity.max(r.commutativity);
            max.associativity = max.associativity.max(r.associativity);
            max.compatibility = max.compatibility.max(r.compatibility);
            max.unit = max.unit.max(r.unit);
            max.quasi_homogeneity = max.quasi_homogeneity.max(r.quasi_homogeneity);
            max.u_symmetry = max.u_symmetry.max(r.u_symmetry);
        }
        let passed = max.worst() < tol;
        Ok(AxiomReport { tol, metric_constant: true, unit_form_closed: true, max, passed, points: per_point })
    }
}

/// Per-point algebra data.
#[derive(Clone, Debug)]
pub struct PointAlgebra {
    pub point: CVec,
    pub eta: CMat,
    pub eta_inv: CMat,
    /// c^k_ij flattened as (k·n + i)·n + j.
    pub c: Vec<C64>,
    /// Matrix of E∘.
    pub u: CMat,
    pub mu: CMat,
    pub unit_index: usize,
}

impl PointAlgebra {
    pub fn dim(&self) -> usize {
        self.point.len()
    }

    pub fn c(&self, k: usize, i: usize, j: usize) -> C64 {
        let n = self.dim();
        self.c[(k * n + i) * n + j]
    }

    /// Matrix of v∘: (v∘)^k_j = Σ_i v^i c^k_ij.
    pub fn mult_matrix(&self, v: &CVec) -> CMat {
        let n = self.dim();
        CMat::from_fn(n, n, |k, j| (0..n).map(|i| v[i] * self.c(k, i, j)).sum())
    }

    pub fn product(&self, a: &CVec, b: &CVec) -> CVec {
        self.mult_matrix(a) * b
    }

    pub fn inner(&self, a: &CVec, b: &CVec) -> C64 {
        crate::linalg::bilinear(&self.eta, a, b)
    }

    pub fn unit(&self) -> CVec {
        let mut e = CVec::zeros(self.dim());
        e[self.unit_index] = real(1.0);
        e
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointResiduals {
    pub point: Vec<C64>,
    pub commutativity: f64,
    pub associativity: f64,
    pub compatibility: f64,
    pub unit: f64,
    pub quasi_homogeneity: f64,
    pub u_symmetry: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MaxResiduals {
    pub commutativity: f64,
    pub associativity: f64,
    pub compatibility: f64,
    pub unit: f64,
    pub quasi_homogeneity: f64,
    pub u_symmetry: f64,
    /// Max of |(d_i + d_j − (2 − d)) η_ij|, the flat-coordinate form of L_E η = (2 − d) η.
    pub euler_metric: f64,
}

impl MaxResiduals {
    pub fn worst(&self) -> f64 {
        [
            self.commutativity,
            self.associativity,
            self.compatibility,
            self.unit,
            self.quasi_homogeneity,
            self.u_symmetry,
            self.euler_metric,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Residuals are scaled by max(1, max|c|) (squared for associativity).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub tol: f64,
    pub metric_constant: bool,
    /// η(e, −) is closed automatically since η is constant.
    pub unit_form_closed: bool,
    pub max: MaxResiduals,
    pub passed: bool,
    pub points: Vec<PointResiduals>,
}

pub fn verify_axioms(spec: &ManifoldSpec, points: &[Vec<C64>], tol: f64) -> Result<AxiomReport> {
    FrobeniusManifold::new(spec.clone())?.verify_axioms(points, tol)
}

pub fn structure_constants(spec: &ManifoldSpec, p: &[C64]) -> Result<Vec<C64>> {
    FrobeniusManifold::new(spec.clone())?.structure_constants(p)
}

pub fn mult_matrix(spec: &ManifoldSpec, p: &[C64], v: &CVec) -> Result<CMat> {
    FrobeniusManifold::new(spec.clone())?.mult_matrix(p, v)
}

/// Seeded points with entries uniform in the square |re|, |im| ≤ 1.
pub fn random_points(n: usize, count: usize, seed: u64) -> Vec<Vec<C64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::linalg::{cmp_complex, eigenvalues, identity};

    fn antidiagonal() -> CMat {
        CMat::from_fn(3, 3, |i, j| if i + j == 2 { real(1.0) } else { real(0.0) })
    }

    #[test]
    fn fixture_metrics_are_antidiagonal() {
        for spec in [fixtures::a3(), fixtures::b3(), fixtures::h3()] {
            assert_eq!(metric(&spec).unwrap(), antidiagonal());
        }
    }

    #[test]
    fn metric_of_single_term() {
        let f = MultiPoly::monomial(3, vec![2, 0, 1], real(0.5)).unwrap();
        let mut spec = fixtures::h3();
        spec.potential = f;
        let eta = metric(&spec).unwrap();
        assert_eq!(eta[(0, 2)], real(1.0));
        assert_eq!(eta[(2, 0)], real(1.0));
        assert_eq!(eta[(1, 1)], real(0.0));
    }

    #[test]
    fn wrong_unit_gives_non_constant_metric() {
        let mut spec = fixtures::h3();
        spec.unit_index = 2;
        assert!(matches!(metric(&spec), Err(Error::NonConstantMetric { .. })));
    }

    #[test]
    fn mu_exact() {
        let r = |a, b| Rational64::new(a, b);
        assert_eq!(mu_diagonal(&fixtures::h3()), vec![r(-2, 5), r(0, 1), r(2, 5)]);
        assert_eq!(mu_diagonal(&fixtures::b3()), vec![r(-1, 3), r(0, 1), r(1, 3)]);
        assert_eq!(mu_diagonal(&fixtures::a3()), vec![r(-1, 4), r(0, 1), r(1, 4)]);
        let mut spec = fixtures::h3();
        spec.euler_linear = vec![r(1, 1); 3];
        spec.charge = r(0, 1);
        assert!(mu_diagonal(&spec).iter().all(|q| q.is_zero()));
    }

    #[test]
    fn inconsistent_charge_is_rejected() {
        let mut spec = fixtures::h3();
        spec.charge = Rational64::new(1, 2);
        assert!(matches!(mu_matrix(&spec), Err(Error::MuNotAntisymmetric { .. })));
    }

    #[test]
    fn unit_acts_as_identity() {
        let m = FrobeniusManifold::new(fixtures::h3()).unwrap();
        for p in random_points(3, 5, 1) {
            let e = m.unit();
            let a = m.mult_matrix(&p, &e).unwrap();
            assert!(max_abs(&(a - identity(3))) < 1e-14);
        }
    }

    #[test]
    fn euler_column_of_h3() {
        let m = FrobeniusManifold::new(fixtures::h3()).unwrap();
        let p = [real(0.3), real(-0.7), real(1.1)];
        let u = m.euler_mult(&p).unwrap();
        assert!((u[(0, 0)] - p[0]).norm() < 1e-14);
        assert!((u[(1, 0)] - p[1] * 0.6).norm() < 1e-14);
        assert!((u[(2, 0)] - p[2] * 0.2).norm() < 1e-14);
    }

    #[test]
    fn multiplication_by_tangent_on_h3_caustic() {
        // ∂_s = 3s²∂_y + ∂_z acting on the basis {∂_r, ∂_s} of the curve y = z³.
        let m = FrobeniusManifold::new(fixtures::h3()).unwrap();
        for s in [0.8, 1.0, 1.3] {
            let p = [real(0.0), real(s * s * s), real(s)];
            let alg = m.at(&p).unwrap();
            let ds = CVec::from_vec(vec![real(0.0), real(3.0 * s * s), real(1.0)]);
            let prod = alg.product(&ds, &ds);
            // prod = a ∂_r + b ∂_s
            let b = prod[2];
            let a = prod[0];
            assert!((prod[1] - b * 3.0 * s * s).norm() < 1e-10);
            assert!((a - real(175.0 / 4.0 * s.powi(8))).norm() < 1e-9);
            assert!((b - real(9.0 * s.powi(4))).norm() < 1e-10);
        }
    }

    #[test]
    fn fixtures_satisfy_axioms() {
        for spec in [fixtures::a3(), fixtures::b3(), fixtures::h3()] {
            let r = verify_axioms(&spec, &random_points(3, 20, 7), 1e-10).unwrap();
            assert!(r.passed, "{:?}", r.max);
        }
        let h = verify_axioms(&fixtures::h3(), &[vec![real(0.0), real(1.0), real(1.0)]], 1e-10).unwrap();
        assert!(h.max.associativity < 1e-10);
    }

    #[test]
    fn corrupted_potentials_fail() {
        let pts = random_points(3, 10, 3);
        let quintic = verify_axioms(&fixtures::corrupted_quintic(), &pts, 1e-10).unwrap();
        assert!(!quintic.passed);
        assert!(quintic.max.quasi_homogeneity > 1e-3);
        let mixed = verify_axioms(&fixtures::corrupted_nonassociative(), &pts, 1e-10).unwrap();
        assert!(mixed.max.associativity > 1e-3);
    }

    #[test]
    fn euler_eigenvalues_scale() {
        let m = FrobeniusManifold::new(fixtures::h3()).unwrap();
        for p in random_points(3, 5, 11) {
            let base = eigenvalues(&m.euler_mult(&p).unwrap()).unwrap();
            for lambda in [0.6, 1.9] {
                let q = m.euler_flow(&p, lambda);
                let mut scaled: Vec<C64> = eigenvalues(&m.euler_mult(&q).unwrap()).unwrap();
                scaled.sort_by(cmp_complex);
                let mut pred: Vec<C64> = base.iter().map(|u| u * lambda).collect();
                pred.sort_by(cmp_complex);
                assert!(crate::linalg::spectrum_distance(&scaled, &pred) < 1e-8);
            }
        }
    }
}
