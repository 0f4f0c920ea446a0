//! Small complex linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn real(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Lexicographic order on (re, im).
pub fn cmp_complex(a: &C64, b: &C64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_vec(v: &CVec) -> f64 {
    v.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Complex QR can stall on some real matrices with conjugate eigenvalue pairs; such inputs are
/// retried after a fixed unitary similarity.
fn schur_eigenvalues(m: &CMat) -> Option<Vec<C64>> {
    let n = m.nrows();
    let scale = max_abs(m);
    if scale == 0.0 {
        return Some(vec![C64::new(0.0, 0.0); n]);
    }
    let m = &m.unscale(scale);
    let collect = |a: CMat| {
        a.try_schur(f64::EPSILON, 500).and_then(|s| s.eigenvalues()).map(|e| e.iter().map(|z| z * scale).collect())
    };
    if let Some(ev) = collect(m.clone()) {
        return Some(ev);
    }
    for attempt in 1..=4 {
        let seed = CMat::from_fn(n, n, |i, j| {
            let t = (attempt * 7 + i * 3 + j * 5) as f64;
            C64::new((1.3 * t).sin(), (0.7 * t + 0.4).cos())
        });
        let q = seed.qr().q();
        if let Some(ev) = collect(q.adjoint() * m * &q) {
            return Some(ev);
        }
    }
    None
}

/// Eigenvalues sorted by (re, im).
pub fn eigenvalues(m: &CMat) -> Result<Vec<C64>> {
    let ev = schur_eigenvalues(m).ok_or(Error::NonFiniteValue)?;
    let mut out = ev;
    if out.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFiniteValue);
    }
    out.sort_by(cmp_complex);
    Ok(out)
}

/// Singular values, ascending.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(f64::total_cmp);
    s
}

/// Right singular vector of the smallest singular value, with that singular value.
pub fn null_vector(m: &CMat) -> (CVec, f64) {
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let (idx, smin) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, s)| (i, *s))
        .expect("non-empty matrix");
    let v = v_t.row(idx).transpose().map(|z| z.conj());
    (v, smin)
}

pub fn inverse(m: &CMat) -> Result<CMat> {
    m.clone().try_inverse().ok_or(Error::SingularMatrix)
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn diag(entries: &[C64]) -> CMat {
    CMat::from_diagonal(&CVec::from_column_slice(entries))
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Bilinear (not Hermitian) form aᵀ g b.
pub fn bilinear(g: &CMat, a: &CVec, b: &CVec) -> C64 {
    (a.transpose() * g * b)[(0, 0)]
}

/// Least-squares coefficients x minimizing ‖A x − b‖, plus the residual norm.
pub fn least_squares(a: &CMat, b: &CVec) -> Result<(CVec, f64)> {
    let svd = a.clone().svd(true, true);
    let x = svd.solve(b, 1e-13).map_err(|_| Error::SingularMatrix)?;
    let r = (a * &x - b).norm();
    Ok((x, r))
}

/// Multiset distance between two eigenvalue lists after sorting.
pub fn spectrum_distance(a: &[C64], b: &[C64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(cmp_complex);
    b.sort_by(cmp_complex);
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    // Greedy matching is robust to ties broken differently by the sort.
    let mut used = vec![false; b.len()];
    let mut worst = 0.0_f64;
    for x in &a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .expect("equal lengths");
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

/// Serde adapter storing a complex matrix as rows of [re, im] pairs.
pub mod serde_cmat {
    use super::{CMat, C64};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &CMat, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<C64>> = (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMat, D::Error> {
        let rows: Vec<Vec<C64>> = Vec::deserialize(d)?;
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(serde::de::Error::custom("ragged matrix"));
        }
        Ok(CMat::from_fn(nrows, ncols, |i, j| rows[i][j]))
    }
}

pub mod serde_cmat_vec {
    use super::CMat;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Wrap(#[serde(with = "super::serde_cmat")] CMat);

    pub fn serialize<S: Serializer>(ms: &[CMat], s: S) -> Result<S::Ok, S::Error> {
        let w: Vec<Wrap> = ms.iter().cloned().map(Wrap).collect();
        w.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<CMat>, D::Error> {
        let w: Vec<Wrap> = Vec::deserialize(d)?;
        Ok(w.into_iter().map(|x| x.0).collect())
    }
}

pub mod serde_cvec {
    use super::{CVec, C64};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &CVec, s: S) -> Result<S::Ok, S::Error> {
        v.iter().copied().collect::<Vec<C64>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CVec, D::Error> {
        Ok(CVec::from_vec(Vec::<C64>::deserialize(d)?))
    }
}

pub mod serde_cvec_vec {
    use super::{CVec, C64};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(vs: &[CVec], s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<C64>> = vs.iter().map(|v| v.iter().copied().collect()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<CVec>, D::Error> {
        Ok(Vec::<Vec<C64>>::deserialize(d)?.into_iter().map(CVec::from_vec).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_vector_of_rank_deficient() {
        let m = CMat::from_row_slice(2, 2, &[real(1.0), real(2.0), real(2.0), real(4.0)]);
        let (v, s) = null_vector(&m);
        assert!(s < 1e-14);
        assert!((&m * &v).norm() < 1e-14);
    }

    #[test]
    fn eigenvalues_of_stalling_real_matrix() {
        let m = CMat::from_row_slice(
            3,
            3,
            &[real(0.0), real(0.5), real(0.0), real(1.0), real(1.0), real(0.5), real(0.0), real(1.0), real(0.0)],
        );
        let ev = eigenvalues(&m).unwrap();
        let tr: C64 = ev.iter().sum();
        let det: C64 = ev.iter().product();
        assert!((tr - m.trace()).norm() < 1e-12);
        assert!((det - m.determinant()).norm() < 1e-12);
    }

    #[test]
    fn eigenvalues_of_zero_matrix() {
        assert_eq!(eigenvalues(&CMat::zeros(3, 3)).unwrap(), vec![real(0.0); 3]);
    }

    #[test]
    fn eigenvalues_sorted() {
        let m = diag(&[real(3.0), c(-1.0, 2.0), c(-1.0, -2.0)]);
        let ev = eigenvalues(&m).unwrap();
        assert!((ev[0] - c(-1.0, -2.0)).norm() < 1e-14);
        assert!((ev[2] - real(3.0)).norm() < 1e-14);
    }

    #[test]
    fn spectrum_distance_ignores_order() {
        let a = [real(1.0), I, -I];
        let b = [-I, real(1.0), I];
        assert!(spectrum_distance(&a, &b) < 1e-15);
    }
}
