//! Dense small-matrix helpers shared by every module.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;
pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Largest singular value; zero for empty matrices.
pub fn op_norm(m: &Mat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.singular_values().iter().cloned().fold(0.0, f64::max)
}

/// Smallest singular value of a square or tall matrix.
pub fn min_singular(m: &Mat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.singular_values().iter().cloned().fold(f64::INFINITY, f64::min)
}

pub fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0_f64, |a, &b| a.max(b.abs()))
}

/// Numerical rank relative to the largest singular value.
pub fn rank(m: &Mat, rtol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rtol * smax).count()
}

/// Orthonormal basis (as columns) of the column span of `m`.
pub fn orthonormal_basis(m: &Mat, rtol: f64) -> Mat {
    let n = m.nrows();
    if m.ncols() == 0 {
        return Mat::zeros(n, 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.unwrap();
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> =
        (0..svd.singular_values.len()).filter(|&k| smax > 0.0 && svd.singular_values[k] > rtol * smax).collect();
    let mut out = Mat::zeros(n, keep.len());
    for (c, &k) in keep.iter().enumerate() {
        out.set_column(c, &u.column(k));
    }
    out
}

/// Orthonormal basis of {x : m x = 0}.
pub fn null_space(m: &Mat, rtol: f64) -> Mat {
    let c = m.ncols();
    let r = m.nrows();
    let sq = if r < c {
        let mut p = Mat::zeros(c, c);
        p.view_mut((0, 0), (r, c)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = sq.svd(false, true);
    let vt = svd.v_t.unwrap();
    let sv = &svd.singular_values;
    let scale = sv.iter().cloned().fold(0.0, f64::max).max(1.0);
    let mut cols = Vec::new();
    for k in 0..sv.len() {
        if sv[k] <= rtol * scale {
            cols.push(vt.row(k).transpose());
        }
    }
    let mut out = Mat::zeros(c, cols.len());
    for (j, v) in cols.iter().enumerate() {
        out.set_column(j, v);
    }
    out
}

/// Right singular vector for the smallest singular value.
pub fn smallest_right_singular(m: &Mat) -> (Vector, f64) {
    let n = m.ncols();
    let sq = if m.nrows() < n {
        let mut p = Mat::zeros(n, n);
        p.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = sq.svd(false, true);
    let vt = svd.v_t.unwrap();
    let (k, s) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (k, &s)| if s < acc.1 { (k, s) } else { acc });
    (vt.row(k).transpose(), s)
}

pub fn to_complex(m: &Mat) -> CMat {
    m.map(|x| C64::new(x, 0.0))
}

/// Eigenvalues of a real square matrix.
pub fn eigenvalues(m: &Mat) -> Vec<C64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    // Shifted by the mean eigenvalue and rescaled.
    let n = m.nrows();
    let c = m.trace() / n as f64;
    let shifted = m - Mat::identity(n, n) * c;
    let s = shifted.amax();
    if s == 0.0 {
        return vec![C64::new(c, 0.0); n];
    }
    let scaled = shifted / s;
    let schur = scaled
        .try_schur(f64::EPSILON, 100_000)
        .or_else(|| m.clone().try_schur(f64::EPSILON, 100_000))
        .expect("Schur iteration converges");
    schur.complex_eigenvalues().iter().map(|z| z * s + c).collect()
}

/// Unit eigenvector for an eigenvalue, computed as the smallest right
/// singular vector of `m - lambda I` over the complex numbers.
pub fn eigenvector(m: &Mat, lambda: C64) -> CVector {
    let n = m.nrows();
    let mut a = to_complex(m);
    for i in 0..n {
        a[(i, i)] -= lambda;
    }
    let svd = a.svd(false, true);
    let vt = svd.v_t.unwrap();
    let (k, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (k, &s)| if s < acc.1 { (k, s) } else { acc });
    let v: CVector = vt.row(k).transpose().map(|z| z.conj());
    let nv = v.norm();
    v / C64::new(nv, 0.0)
}

/// Unit real eigenvector for a real eigenvalue.
pub fn real_eigenvector(m: &Mat, lambda: f64) -> Vector {
    let n = m.nrows();
    let a = m - Mat::identity(n, n) * lambda;
    let (v, _) = smallest_right_singular(&a);
    v.normalize()
}

/// Two-dimensional real invariant space for an eigenvalue pair `(a, b)`
/// that is either real or conjugate: the kernel of `(M − a)(M − b)`, which
/// stays well conditioned when `a ≈ b`.
pub fn pair_kernel(m: &Mat, a: C64, b: C64) -> Mat {
    let d = m.nrows();
    let s = (a + b).re;
    let p = (a * b).re;
    let q = m * m - m * s + Mat::identity(d, d) * p;
    let svd = q.svd(false, true);
    let vt = svd.v_t.unwrap();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&x, &y| svd.singular_values[x].total_cmp(&svd.singular_values[y]));
    span(&[vt.row(order[0]).transpose(), vt.row(order[1]).transpose()])
}

/// Real and imaginary parts of a complex vector as the columns of a real
/// n×2 matrix; spans the real invariant plane of a non-real eigenvalue.
pub fn real_plane(v: &CVector) -> Mat {
    let n = v.len();
    let mut out = Mat::zeros(n, 2);
    for i in 0..n {
        out[(i, 0)] = v[i].re;
        out[(i, 1)] = v[i].im;
    }
    out
}

/// Angle in [0, π/2] between two lines.
pub fn line_angle(u: &Vector, v: &Vector) -> f64 {
    let (u, v) = (u / u.norm(), v / v.norm());
    let c = u.dot(&v);
    (&u - &v * c).norm().atan2(c.abs())
}

/// Largest principal angle between two subspaces of equal dimension.
pub fn subspace_angle(a: &Mat, b: &Mat) -> f64 {
    if a.ncols() == 0 && b.ncols() == 0 {
        return 0.0;
    }
    let qa = orthonormal_basis(a, 1e-12);
    let qb = orthonormal_basis(b, 1e-12);
    if qa.ncols() != qb.ncols() {
        return std::f64::consts::FRAC_PI_2;
    }
    let rest = &qa - &qb * (qb.transpose() * &qa);
    op_norm(&rest).clamp(0.0, 1.0).asin()
}

/// Smallest principal angle between two subspaces (0 if they intersect).
pub fn min_angle(a: &Mat, b: &Mat) -> f64 {
    if a.ncols() == 0 || b.ncols() == 0 {
        return std::f64::consts::FRAC_PI_2;
    }
    let qa = orthonormal_basis(a, 1e-12);
    let qb = orthonormal_basis(b, 1e-12);
    let s = (qa.transpose() * qb).singular_values();
    let smax = s.iter().cloned().fold(0.0_f64, f64::max).clamp(0.0, 1.0);
    smax.acos()
}

/// Distance of the column span of `v` from the subspace spanned by `w`:
/// norm of the residual of orthogonal projection of the orthonormalized `v`.
pub fn containment_defect(v: &Mat, w: &Mat) -> f64 {
    if v.ncols() == 0 {
        return 0.0;
    }
    let qv = orthonormal_basis(v, 1e-12);
    let qw = orthonormal_basis(w, 1e-12);
    let proj = &qw * (qw.transpose() * &qv);
    op_norm(&(qv - proj))
}

/// Cayley transform (I - X/2)^{-1}(I + X/2).
pub fn cayley(x: &Mat) -> Mat {
    let n = x.nrows();
    let i = Mat::identity(n, n);
    let a = &i - x * 0.5;
    let b = &i + x * 0.5;
    a.lu().solve(&b).expect("Cayley transform of a large generator")
}

/// Horizontal concatenation of column blocks with a common row count.
pub fn hcat(blocks: &[&Mat]) -> Mat {
    let rows = blocks.iter().map(|b| b.nrows()).max().unwrap_or(0);
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(rows, cols);
    let mut c = 0;
    for b in blocks {
        out.view_mut((0, c), (b.nrows(), b.ncols())).copy_from(*b);
        c += b.ncols();
    }
    out
}

/// Matrix whose columns are the given vectors.
pub fn span(vs: &[Vector]) -> Mat {
    let n = vs.first().map(|v| v.len()).unwrap_or(0);
    let mut out = Mat::zeros(n, vs.len());
    for (c, v) in vs.iter().enumerate() {
        out.set_column(c, v);
    }
    out
}

pub fn columns(m: &Mat, idx: &[usize]) -> Mat {
    let mut out = Mat::zeros(m.nrows(), idx.len());
    for (c, &k) in idx.iter().enumerate() {
        out.set_column(c, &m.column(k));
    }
    out
}

pub fn rows(m: &Mat, idx: &[usize]) -> Mat {
    let mut out = Mat::zeros(idx.len(), m.ncols());
    for (r, &k) in idx.iter().enumerate() {
        out.set_row(r, &m.row(k));
    }
    out
}

pub fn submatrix(m: &Mat, r: &[usize], c: &[usize]) -> Mat {
    Mat::from_fn(r.len(), c.len(), |i, j| m[(r[i], c[j])])
}

pub fn inverse(m: &Mat) -> Option<Mat> {
    m.clone().try_inverse()
}

/// Product of matrices applied in sequence: `seq[0]` first.
pub fn product<'a, I>(dim: usize, seq: I) -> Mat
where
    I: IntoIterator<Item = &'a Mat>,
{
    let mut p = Mat::identity(dim, dim);
    for m in seq {
        p = m * p;
    }
    p
}

/// Row-major conversion helpers used by the file formats.
pub fn to_rows(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

pub fn from_rows(rows: &[Vec<f64>]) -> Option<Mat> {
    let r = rows.len();
    let c = rows.first().map(|x| x.len()).unwrap_or(0);
    if rows.iter().any(|x| x.len() != c) {
        return None;
    }
    Some(Mat::from_fn(r, c, |i, j| rows[i][j]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_space_of_wide_matrix() {
        let m = Mat::from_row_slice(1, 3, &[1.0, 0.0, 0.0]);
        let ns = null_space(&m, 1e-10);
        assert_eq!(ns.ncols(), 2);
        assert!((m * ns).norm() < 1e-12);
    }

    #[test]
    fn op_norm_of_diagonal() {
        let m = Mat::from_diagonal(&Vector::from_vec(vec![2.0, 0.5]));
        assert!((op_norm(&m) - 2.0).abs() < 1e-14);
        assert!((min_singular(&m) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn eigenvector_of_rotation() {
        let (c, s) = (0.3_f64.cos(), 0.3_f64.sin());
        let m = Mat::from_row_slice(2, 2, &[c, -s, s, c]);
        let lam = C64::new(c, s);
        let v = eigenvector(&m, lam);
        let r = to_complex(&m) * &v - &v * lam;
        assert!(r.norm() < 1e-12);
    }

    #[test]
    fn angles() {
        let a = Mat::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        let b = Mat::from_column_slice(3, 1, &[1.0, 1.0, 0.0]);
        assert!((subspace_angle(&a, &b) - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
        assert!(containment_defect(&a, &b) > 0.5);
    }
}
