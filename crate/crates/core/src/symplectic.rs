//! Symplectic linear algebra in the canonical anti-diagonal convention.
//!
//! Indices are 0-based. The involution is `star(i) = 2N - 1 - i` and the form
//! matrix `J` has `J[i][star(i)] = +1` for `i < N` and `-1` for `i >= N`, so
//! `ω(u, v) = uᵀ J v` satisfies `ω(e_i, e_{i*}) = 1` whenever `i < i*` and
//! vanishes on every other pair of canonical basis vectors.

use crate::error::{Error, Result};
use crate::linalg::{self, CVector, Mat, Vector, C64};
use rand::Rng;
use serde::{Deserialize, Serialize};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const PAIRING_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticSpace {
    pub n: usize,
    pub j: Mat,
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SubspaceKind {
    Isotropic,
    Symplectic,
    Lagrangian,
    Mixed,
}

impl SubspaceKind {
    /// Lagrangian subspaces are isotropic too.
    pub fn is_isotropic(self) -> bool {
        matches!(self, SubspaceKind::Isotropic | SubspaceKind::Lagrangian)
    }
}

/// One `(λ, 1/λ)` pair with unit eigenvectors. `lambda` is the member of
/// larger modulus (positive imaginary part on the unit circle).
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub lambda: C64,
    pub lambda_star: C64,
    pub vec: CVector,
    pub vec_star: CVector,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct PairedSpectrum {
    pub pairs: Vec<EigenPair>,
}

impl PairedSpectrum {
    pub fn max_residual(&self) -> f64 {
        self.pairs.iter().map(|p| p.residual).fold(0.0, f64::max)
    }

    pub fn values(&self) -> Vec<C64> {
        self.pairs.iter().flat_map(|p| [p.lambda, p.lambda_star]).collect()
    }
}

/// Eigenvectors of a matrix with simple real spectrum, normalized into a
/// symplectic basis. Column `i` of `basis` is `e_i`, with eigenvalue
/// `values[i]`; moduli increase with `i`.
#[derive(Debug, Clone)]
pub struct EigenBasis {
    pub values: Vec<f64>,
    pub basis: Mat,
}

impl EigenBasis {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, i: usize) -> Vector {
        self.basis.column(i).into_owned()
    }

    /// Coordinates of `v` in the eigenbasis.
    pub fn coords(&self, v: &Vector) -> Vector {
        self.basis.clone().lu().solve(v).expect("eigenbasis is invertible")
    }

    /// Matrix of a linear map written in eigenbasis coordinates.
    pub fn to_coords(&self, m: &Mat) -> Mat {
        let inv = self.basis.clone().try_inverse().expect("eigenbasis is invertible");
        inv * m * &self.basis
    }

    pub fn from_coords(&self, m: &Mat) -> Mat {
        let inv = self.basis.clone().try_inverse().expect("eigenbasis is invertible");
        &self.basis * m * inv
    }
}

impl SymplecticSpace {
    pub fn standard_form(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::ZeroDimension);
        }
        let d = 2 * n;
        let mut j = Mat::zeros(d, d);
        for i in 0..d {
            j[(i, d - 1 - i)] = if i < n { 1.0 } else { -1.0 };
        }
        Ok(SymplecticSpace { n, j, tol: DEFAULT_TOL })
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn half_dim(&self) -> usize {
        self.n
    }

    pub fn star(&self, i: usize) -> usize {
        2 * self.n - 1 - i
    }

    pub fn omega(&self, u: &Vector, v: &Vector) -> f64 {
        (u.transpose() * &self.j * v)[(0, 0)]
    }

    /// `ω(e_i, e_j)` in the canonical basis.
    pub fn canonical(&self, i: usize, j: usize) -> f64 {
        self.j[(i, j)]
    }

    /// Gram matrix `BᵀJB` of the form on the columns of `b`.
    pub fn omega_table(&self, b: &Mat) -> Mat {
        b.transpose() * &self.j * b
    }

    pub fn identity(&self) -> Mat {
        Mat::identity(self.dim(), self.dim())
    }

    pub fn basis_vector(&self, i: usize) -> Vector {
        let mut v = Vector::zeros(self.dim());
        v[i] = 1.0;
        v
    }

    fn check_dim(&self, m: &Mat) -> Result<()> {
        let d = self.dim();
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: m.nrows().max(m.ncols()) });
        }
        Ok(())
    }

    /// Max-norm residual of `MᵀJM - J`.
    pub fn symplectic_residual(&self, m: &Mat) -> Result<f64> {
        self.check_dim(m)?;
        Ok(linalg::max_abs(&(m.transpose() * &self.j * m - &self.j)))
    }

    pub fn is_symplectic(&self, m: &Mat) -> Result<(bool, f64)> {
        let r = self.symplectic_residual(m)?;
        Ok((r <= self.tol, r))
    }

    /// Nearby symplectic matrix for an `M` that is symplectic up to rounding,
    /// by Newton steps `M ← M (I + ½ J E)` with `E = MᵀJM − J`.
    pub fn refine(&self, m: &Mat) -> Mat {
        let mut m = m.clone();
        for _ in 0..3 {
            let e = m.transpose() * &self.j * &m - &self.j;
            if linalg::max_abs(&e) == 0.0 {
                break;
            }
            m += &m * &self.j * e * 0.5;
        }
        m
    }

    /// Exact inverse of a symplectic matrix: `M⁻¹ = -J Mᵀ J`.
    pub fn symplectic_inverse(&self, m: &Mat) -> Mat {
        -(&self.j * m.transpose() * &self.j)
    }

    fn checked_basis(&self, w: &Mat) -> Result<()> {
        if w.nrows() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: w.nrows() });
        }
        if w.ncols() > 0 && linalg::rank(w, 1e-10) < w.ncols() {
            return Err(Error::DegenerateBasis(format!("{} vectors span rank {}", w.ncols(), linalg::rank(w, 1e-10))));
        }
        Ok(())
    }

    pub fn symplectic_complement(&self, w: &Mat) -> Result<Mat> {
        self.checked_basis(w)?;
        if w.ncols() == 0 {
            return Ok(self.identity());
        }
        let q = linalg::orthonormal_basis(w, 1e-12);
        Ok(linalg::null_space(&(q.transpose() * &self.j), 1e-10))
    }

    pub fn classify_subspace(&self, w: &Mat) -> Result<SubspaceKind> {
        self.checked_basis(w)?;
        let k = w.ncols();
        if k == 0 {
            return Ok(SubspaceKind::Isotropic);
        }
        let q = linalg::orthonormal_basis(w, 1e-12);
        let g = self.omega_table(&q);
        let r = if linalg::max_abs(&g) <= 1e-10 { 0 } else { linalg::rank(&g, 1e-10) };
        Ok(if r == 0 {
            if k == self.n {
                SubspaceKind::Lagrangian
            } else {
                SubspaceKind::Isotropic
            }
        } else if r == k {
            SubspaceKind::Symplectic
        } else {
            SubspaceKind::Mixed
        })
    }

    /// Eigenvalues grouped into `(λ, 1/λ)` pairs, largest modulus first.
    pub fn paired_spectrum(&self, m: &Mat) -> Result<PairedSpectrum> {
        self.paired_spectrum_tol(m, PAIRING_TOL)
    }

    pub fn paired_spectrum_tol(&self, m: &Mat, tol: f64) -> Result<PairedSpectrum> {
        self.check_dim(m)?;
        let mut ev = linalg::eigenvalues(m);
        ev.sort_by(|a, b| b.norm().total_cmp(&a.norm()).then(b.im.total_cmp(&a.im)));
        let mut used = vec![false; ev.len()];
        let mut pairs = Vec::with_capacity(self.n);
        for a in 0..ev.len() {
            if used[a] {
                continue;
            }
            used[a] = true;
            let mut best = None;
            let mut best_r = f64::INFINITY;
            for b in 0..ev.len() {
                if used[b] {
                    continue;
                }
                let r = (ev[a] * ev[b] - 1.0).norm();
                if r < best_r {
                    best_r = r;
                    best = Some(b);
                }
            }
            let b = match best {
                Some(b) if best_r <= tol => b,
                _ => {
                    return Err(Error::UnpairedEigenvalue {
                        value: format!("{:.6}{:+.6}i", ev[a].re, ev[a].im),
                        residual: best_r,
                    })
                }
            };
            used[b] = true;
            let (mut x, mut y) = (ev[a], ev[b]);
            if y.norm() > x.norm() || (y.norm() == x.norm() && y.im > x.im) {
                std::mem::swap(&mut x, &mut y);
            }
            pairs.push(EigenPair {
                lambda: x,
                lambda_star: y,
                vec: linalg::eigenvector(m, x),
                vec_star: linalg::eigenvector(m, y),
                residual: best_r,
            });
        }
        Ok(PairedSpectrum { pairs })
    }

    /// Symplectic basis of eigenvectors for a matrix with `2N` real
    /// eigenvalues whose moduli are separated by at least `gap`.
    pub fn eigen_symplectic_basis(&self, m: &Mat, gap: f64) -> Result<EigenBasis> {
        self.check_dim(m)?;
        let scale = linalg::op_norm(m).max(1.0);
        let res = self.symplectic_residual(m)?;
        if res > PAIRING_TOL * scale * scale {
            return Err(Error::NotSymplectic { residual: res });
        }
        let ev = linalg::eigenvalues(m);
        if ev.iter().any(|z| z.im.abs() > 1e-8 * z.norm().max(1.0)) {
            return Err(Error::ComplexSpectrum);
        }
        let mut vals: Vec<f64> = ev.iter().map(|z| z.re).collect();
        vals.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
        let min_gap = vals.windows(2).map(|w| w[1].abs() - w[0].abs()).fold(f64::INFINITY, f64::min);
        if min_gap < gap {
            return Err(Error::GapViolation { found: min_gap, required: gap });
        }
        let d = self.dim();
        let mut basis = Mat::zeros(d, d);
        for i in 0..self.n {
            let s = self.star(i);
            let u = linalg::real_eigenvector(m, vals[i]);
            let v = linalg::real_eigenvector(m, vals[s]);
            let w = self.omega(&u, &v);
            if w.abs() < 1e-12 {
                return Err(Error::DegenerateBasis(format!("ω(e_{i}, e_{s}) vanishes")));
            }
            let k = w.abs().sqrt();
            basis.set_column(i, &(u * (w.signum() / k)));
            basis.set_column(s, &(v / k));
        }
        Ok(EigenBasis { values: vals, basis })
    }

    /// Exact symplectic shear `I + s J a aᵀ`.
    pub fn shear(&self, a: &Vector, s: f64) -> Mat {
        self.identity() + (&self.j * a * a.transpose()) * s
    }

    /// Symplectic matrix `diag(d_0, .., d_{N-1}, 1/d_{N-1}, .., 1/d_0)`.
    pub fn diagonal(&self, d: &[f64]) -> Mat {
        let mut m = self.identity();
        for i in 0..self.n {
            m[(i, i)] = d[i];
            let s = self.star(i);
            m[(s, s)] = 1.0 / d[i];
        }
        m
    }

    /// Places a 2×2 block (determinant one) on the plane `(e_i, e_{i*})`.
    pub fn pair_block(&self, i: usize, b: &Mat) -> Mat {
        let (lo, hi) = if i < self.n { (i, self.star(i)) } else { (self.star(i), i) };
        let mut m = self.identity();
        m[(lo, lo)] = b[(0, 0)];
        m[(lo, hi)] = b[(0, 1)];
        m[(hi, lo)] = b[(1, 0)];
        m[(hi, hi)] = b[(1, 1)];
        m
    }

    /// Symplectic map `(I - X/2)⁻¹(I + X/2)` with `X = J H` for symmetric `H`.
    pub fn cayley_symmetric(&self, h: &Mat) -> Mat {
        let sym = (h + h.transpose()) * 0.5;
        linalg::cayley(&(&self.j * sym))
    }

    /// Random symplectic matrix: Cayley transform of a random Hamiltonian
    /// generator with symmetric part of entries in `[-scale, scale]`.
    pub fn random_symplectic<R: Rng + ?Sized>(&self, rng: &mut R, scale: f64) -> Mat {
        let d = self.dim();
        let h = Mat::from_fn(d, d, |_, _| rng.random_range(-scale..=scale));
        self.cayley_symmetric(&h)
    }
}

/// 2×2 rotation by angle `t`.
pub fn rotation(t: f64) -> Mat {
    let (s, c) = t.sin_cos();
    Mat::from_row_slice(2, 2, &[c, -s, s, c])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sp(n: usize) -> SymplecticSpace {
        SymplecticSpace::standard_form(n).unwrap()
    }

    #[test]
    fn refine_restores_symplecticity() {
        let s = sp(3);
        let mut r = ChaCha8Rng::seed_from_u64(9);
        let m = s.random_symplectic(&mut r, 0.5);
        let noisy = &m + Mat::from_fn(6, 6, |i, j| 1e-9 * ((i * 7 + j) % 5) as f64);
        assert!(s.symplectic_residual(&noisy).unwrap() > 1e-10);
        let fixed = s.refine(&noisy);
        assert!(s.symplectic_residual(&fixed).unwrap() < 1e-14);
        assert!(linalg::op_norm(&(&fixed - &m)) < 1e-7);
    }

    #[test]
    fn standard_forms() {
        assert_eq!(sp(1).j, Mat::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]));
        let j4 = Mat::from_row_slice(4, 4, &[0., 0., 0., 1., 0., 0., 1., 0., 0., -1., 0., 0., -1., 0., 0., 0.]);
        assert_eq!(sp(2).j, j4);
        let s = sp(3);
        assert_eq!(s.omega(&s.basis_vector(0), &s.basis_vector(5)), 1.0);
        assert_eq!(SymplecticSpace::standard_form(0), Err(Error::ZeroDimension));
    }

    #[test]
    fn symplecticity_examples() {
        let s = sp(1);
        assert!(s.is_symplectic(&s.identity()).unwrap().0);
        assert!(s.is_symplectic(&s.diagonal(&[2.0])).unwrap().0);
        let (ok, r) = s.is_symplectic(&Mat::from_diagonal(&Vector::from_vec(vec![2.0, 1.0]))).unwrap();
        assert!(!ok);
        assert_eq!(r, 1.0);
        assert!(s.is_symplectic(&sp(2).identity()).is_err());
    }

    #[test]
    fn complements_and_kinds() {
        let s4 = sp(2);
        let e = |i: usize| s4.basis_vector(i);
        let w12 = linalg::span(&[e(0), e(1)]);
        let w14 = linalg::span(&[e(0), e(3)]);
        let c = s4.symplectic_complement(&w12).unwrap();
        assert!(linalg::subspace_angle(&c, &w12) < 1e-10);
        let c = s4.symplectic_complement(&w14).unwrap();
        let w23 = linalg::span(&[e(1), e(2)]);
        assert!(linalg::subspace_angle(&c, &w23) < 1e-10);
        assert_eq!(s4.classify_subspace(&w12).unwrap(), SubspaceKind::Lagrangian);
        assert!(s4.classify_subspace(&w12).unwrap().is_isotropic());
        assert_eq!(s4.classify_subspace(&w14).unwrap(), SubspaceKind::Symplectic);
        let s2 = sp(1);
        assert_eq!(s2.classify_subspace(&linalg::span(&[s2.basis_vector(0)])).unwrap(), SubspaceKind::Lagrangian);
        let w = linalg::span(&[e(0), e(1), e(3)]);
        assert_eq!(s4.classify_subspace(&w).unwrap(), SubspaceKind::Mixed);
        let bad = linalg::span(&[e(0), e(0)]);
        assert!(matches!(s4.classify_subspace(&bad), Err(Error::DegenerateBasis(_))));
    }

    #[test]
    fn spectra() {
        let ps = sp(1).paired_spectrum(&sp(1).diagonal(&[2.0])).unwrap();
        assert!((ps.pairs[0].lambda - C64::new(2.0, 0.0)).norm() < 1e-12);
        assert!((ps.pairs[0].lambda_star - C64::new(0.5, 0.0)).norm() < 1e-12);
        let ps = sp(2).paired_spectrum(&sp(2).diagonal(&[3.0, 2.0])).unwrap();
        assert!((ps.pairs[0].lambda.re - 3.0).abs() < 1e-12);
        assert!((ps.pairs[1].lambda.re - 2.0).abs() < 1e-12);
        let ps = sp(1).paired_spectrum(&rotation(0.3)).unwrap();
        assert!((ps.pairs[0].lambda - C64::from_polar(1.0, 0.3)).norm() < 1e-12);
        assert!((ps.pairs[0].lambda_star - C64::from_polar(1.0, -0.3)).norm() < 1e-12);
    }

    #[test]
    fn eigenbases() {
        let s = sp(2);
        let eb = s.eigen_symplectic_basis(&s.diagonal(&[3.0, 2.0]), 1e-3).unwrap();
        assert!((s.omega_table(&eb.basis) - &s.j).abs().max() < 1e-12);
        for (v, w) in eb.values.iter().zip([1.0 / 3.0, 0.5, 2.0, 3.0]) {
            assert!((v - w).abs() < 1e-12);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = s.random_symplectic(&mut rng, 0.5);
        let m = &p * s.diagonal(&[3.0, 1.5]) * s.symplectic_inverse(&p);
        let eb = s.eigen_symplectic_basis(&m, 1e-3).unwrap();
        assert!((s.omega_table(&eb.basis) - &s.j).abs().max() < 1e-8);
        assert_eq!(sp(1).eigen_symplectic_basis(&rotation(0.3), 1e-3).unwrap_err(), Error::ComplexSpectrum);
    }

    #[test]
    fn shear_is_symplectic() {
        let s = sp(3);
        let a = Vector::from_vec(vec![0.3, -1.0, 0.2, 0.5, 0.0, 1.1]);
        assert!(s.symplectic_residual(&s.shear(&a, 0.7)).unwrap() < 1e-14);
    }
}
