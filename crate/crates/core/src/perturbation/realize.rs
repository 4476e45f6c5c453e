//! Realizing 2×2 perturbations along a pair of eigenlines as symplectic
//! perturbations of the whole fiber, and straightening of nearby lines.

use crate::cocycle::PeriodicOrbit;
use crate::error::{Error, Result};
use crate::linalg::{self, Mat, Vector};
use crate::symplectic::{EigenBasis, SymplecticSpace};
use serde::{Deserialize, Serialize};

/// A 2×2 block on the eigenlines `(e_j, e_k)`, `j < k` (0-based). The
/// columns hold the images: `B e_j = α e_j + β e_k`, `B e_k = γ e_j + δ e_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockPerturbation {
    pub j: usize,
    pub k: usize,
    pub b: Mat,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockCoefficients {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl BlockPerturbation {
    pub fn new(j: usize, k: usize, b: Mat) -> Result<Self> {
        if b.nrows() != 2 || b.ncols() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, found: b.nrows() });
        }
        let (j, k, b) = if j < k {
            (j, k, b)
        } else if j > k {
            let s = Mat::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
            (k, j, &s * b * &s)
        } else {
            return Err(Error::Invalid("block needs two distinct indices".into()));
        };
        Ok(BlockPerturbation { j, k, b })
    }

    pub fn from_coefficients(j: usize, k: usize, alpha: f64, beta: f64, gamma: f64, delta: f64) -> Result<Self> {
        Self::new(j, k, Mat::from_row_slice(2, 2, &[alpha, gamma, beta, delta]))
    }

    pub fn coefficients(&self) -> BlockCoefficients {
        BlockCoefficients { alpha: self.b[(0, 0)], beta: self.b[(1, 0)], gamma: self.b[(0, 1)], delta: self.b[(1, 1)] }
    }

    /// `Δ = αδ − βγ`.
    pub fn det(&self) -> f64 {
        self.b[(0, 0)] * self.b[(1, 1)] - self.b[(0, 1)] * self.b[(1, 0)]
    }

    /// Induced block on `(e_{j*}, e_{k*})`:
    /// `B̃ e_{j*} = (δ/Δ) e_{j*} − σ(γ/Δ) e_{k*}`,
    /// `B̃ e_{k*} = −σ(β/Δ) e_{j*} + (α/Δ) e_{k*}`, where `σ = +1` unless
    /// exactly one of `j`, `k` lies in the upper half.
    pub fn conjugate_block(&self, space: &SymplecticSpace) -> Result<Mat> {
        let c = self.coefficients();
        let d = self.det();
        if d.abs() < 1e-300 {
            return Err(Error::Invalid("block has Δ = 0".into()));
        }
        let sigma = space.canonical(self.j, space.star(self.j)) * space.canonical(self.k, space.star(self.k));
        Ok(Mat::from_row_slice(2, 2, &[c.delta / d, -sigma * c.beta / d, -sigma * c.gamma / d, c.alpha / d]))
    }

    pub fn is_symplectic_plane(&self, space: &SymplecticSpace) -> bool {
        self.k == space.star(self.j)
    }
}

/// Replaces the `(j, k)` block of `c` (a map written in a symplectic basis
/// that preserves each basis line involved) by `B`, and the conjugate block
/// by `B̃`. Returns the new coordinate matrix.
pub fn realize_in_coords(space: &SymplecticSpace, c: &Mat, pert: &BlockPerturbation) -> Result<Mat> {
    let d = space.dim();
    if c.nrows() != d || c.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, found: c.nrows() });
    }
    let (j, k) = (pert.j, pert.k);
    if k >= d {
        return Err(Error::Invalid(format!("index {k} outside 0..{d}")));
    }
    let det = pert.det();
    if det.abs() < 1e-300 {
        return Err(Error::Invalid("block has Δ = 0".into()));
    }
    let (sj, sk) = (space.star(j), space.star(k));
    let touched: Vec<usize> = if pert.is_symplectic_plane(space) { vec![j, k] } else { vec![j, k, sj, sk] };
    let scale = linalg::max_abs(c).max(1.0);
    for &t in &touched {
        for r in 0..d {
            let inside =
                if pert.is_symplectic_plane(space) || t == j || t == k { r == j || r == k } else { r == sj || r == sk };
            if !inside && (c[(r, t)].abs() > 1e-9 * scale || c[(t, r)].abs() > 1e-9 * scale) {
                return Err(Error::Hypothesis(format!(
                    "coordinates mix line {t} with line {r}; realization needs invariant lines"
                )));
            }
        }
    }
    let mut out = c.clone();
    for &t in &touched {
        for r in 0..d {
            out[(r, t)] = 0.0;
            out[(t, r)] = 0.0;
        }
    }
    if pert.is_symplectic_plane(space) {
        if (det - 1.0).abs() > 1e-9 {
            return Err(Error::NotSymplectic { residual: (det - 1.0).abs() });
        }
        let (lo, hi) = (j.min(k), j.max(k));
        out[(lo, lo)] = pert.b[(0, 0)];
        out[(hi, lo)] = pert.b[(1, 0)];
        out[(lo, hi)] = pert.b[(0, 1)];
        out[(hi, hi)] = pert.b[(1, 1)];
        return Ok(out);
    }
    let bt = pert.conjugate_block(space)?;
    let idx = [j, k];
    let cidx = [sj, sk];
    for a in 0..2 {
        for b in 0..2 {
            out[(idx[a], idx[b])] = pert.b[(a, b)];
            out[(cidx[a], cidx[b])] = bt[(a, b)];
        }
    }
    Ok(out)
}

/// Ambient map acting as `c` on the span of a symplectic frame `s`
/// (columns with ω-table equal to the standard form of their count) and as
/// the identity on its symplectic complement:
/// `P = I + S (C − I) J_s⁻¹ Sᵀ J`.
pub fn realize_on_frame(space: &SymplecticSpace, frame: &Mat, c: &Mat) -> Result<Mat> {
    let m = frame.ncols();
    if !m.is_multiple_of(2) || m == 0 {
        return Err(Error::Invalid("frame needs an even positive number of vectors".into()));
    }
    let local = SymplecticSpace::standard_form(m / 2)?;
    let table = space.omega_table(frame);
    let defect = linalg::max_abs(&(&table - &local.j));
    if defect > 1e-8 {
        return Err(Error::DegenerateBasis(format!("frame ω-table defect {defect:.3e}")));
    }
    let jinv = -&local.j;
    let id = Mat::identity(m, m);
    Ok(space.identity() + frame * (c - id) * jinv * frame.transpose() * &space.j)
}

/// Map equal to the identity except on the eigenlines of `pert`, where it
/// acts by `B` and `B̃` in the coordinates of the symplectic basis `basis`.
pub fn realize_at(space: &SymplecticSpace, basis: &Mat, pert: &BlockPerturbation) -> Result<Mat> {
    let c = realize_in_coords(space, &space.identity(), pert)?;
    realize_on_frame(space, basis, &c)
}

/// Symplectic bases along an orbit: `frames[0]` is the eigenbasis of the
/// period map at point 0 and `frames[t + 1] = A_t frames[t]`.
#[derive(Debug, Clone)]
pub struct OrbitFrames {
    pub frames: Vec<Mat>,
    pub values: Vec<f64>,
}

impl OrbitFrames {
    pub fn new(orbit: &PeriodicOrbit, eb: &EigenBasis) -> Self {
        let mut frames = Vec::with_capacity(orbit.period());
        let mut cur = eb.basis.clone();
        for t in 0..orbit.period() {
            frames.push(cur.clone());
            cur = &orbit.letters[t] * cur;
        }
        OrbitFrames { frames, values: eb.values.clone() }
    }

    pub fn at(&self, t: usize) -> &Mat {
        &self.frames[t % self.frames.len()]
    }

    /// Letter `t` written from `frames[t]` to `frames[t + 1]`.
    pub fn coords(&self, space: &SymplecticSpace, orbit: &PeriodicOrbit, t: usize) -> Mat {
        let dst = self.at(t + 1);
        space.symplectic_inverse(dst) * &orbit.letters[t] * self.at(t)
    }
}

#[derive(Debug, Clone)]
pub struct Realized {
    pub orbit: PeriodicOrbit,
    pub coords: Mat,
    pub conjugate: Option<Mat>,
    pub distance: f64,
}

/// Replaces the `(j, k)` block of letter `t` (in eigen-frame coordinates)
/// by `B`, compensating on the conjugate lines.
pub fn realize_on_pair(
    space: &SymplecticSpace,
    orbit: &PeriodicOrbit,
    frames: &OrbitFrames,
    t: usize,
    pert: &BlockPerturbation,
    budget: Option<f64>,
) -> Result<Realized> {
    let c = frames.coords(space, orbit, t);
    let ct = realize_in_coords(space, &c, pert)?;
    let letter = frames.at(t + 1) * &ct * space.symplectic_inverse(frames.at(t));
    let distance = linalg::op_norm(&(&letter - &orbit.letters[t]));
    if let Some(eps) = budget {
        if distance > eps {
            return Err(Error::Budget { stage: "realize_on_pair".into(), needed: distance, allowed: eps });
        }
    }
    let mut out = orbit.clone();
    out.letters[t] = letter;
    let conjugate = if pert.is_symplectic_plane(space) { None } else { Some(pert.conjugate_block(space)?) };
    Ok(Realized { orbit: out, coords: ct, conjugate, distance })
}

#[derive(Debug, Clone)]
pub struct Straightening {
    pub p: Mat,
    pub block: BlockPerturbation,
    /// `ω(e_i, ẽ_j)`; equals the scale `s` in the symplectic case.
    pub omega: f64,
}

/// Symplectic map near the identity fixing `E_i` and sending the line
/// `Ẽ_j ⊂ E_i ⊕ E_j` (spanned by `e_tilde`) onto `E_j`. Basis vectors are
/// the columns of `basis`, a symplectic basis.
pub fn straighten(
    space: &SymplecticSpace,
    basis: &Mat,
    i: usize,
    j: usize,
    e_tilde: &Vector,
    max_angle: f64,
) -> Result<Straightening> {
    if i == j {
        return Err(Error::Invalid("straighten needs distinct lines".into()));
    }
    let coords = space.symplectic_inverse(basis) * e_tilde;
    let (r, s) = (coords[i], coords[j]);
    let off = (0..space.dim()).filter(|&m| m != i && m != j).map(|m| coords[m].abs()).fold(0.0, f64::max);
    if off > 1e-9 * coords.norm() {
        return Err(Error::Hypothesis(format!("line leaves E_{i} ⊕ E_{j} (component {off:.3e})")));
    }
    let angle = linalg::line_angle(e_tilde, &basis.column(j).into_owned());
    if angle > max_angle {
        return Err(Error::Hypothesis(format!("angle {angle:.3e} above threshold {max_angle:.3e}")));
    }
    let ei = basis.column(i).into_owned();
    let omega = space.omega(&ei, e_tilde);
    // Block columns are images of (e_i, e_j) in (e_i, e_j) coordinates.
    let b = if j == space.star(i) {
        Mat::from_row_slice(2, 2, &[s, -r, 0.0, 1.0 / s])
    } else {
        Mat::from_row_slice(2, 2, &[1.0, -r / s, 0.0, 1.0])
    };
    // Reorder to (min, max) via the constructor.
    let block = BlockPerturbation::new(i, j, b)?;
    let p = realize_at(space, basis, &block)?;
    Ok(Straightening { p, block, omega })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::rotation;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sp(n: usize) -> SymplecticSpace {
        SymplecticSpace::standard_form(n).unwrap()
    }

    #[test]
    fn unchanged_block_is_identity_op() {
        let s = sp(2);
        let c = s.diagonal(&[3.0, 2.0]);
        let pert = BlockPerturbation::new(0, 1, Mat::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 2.0])).unwrap();
        assert_eq!(realize_in_coords(&s, &c, &pert).unwrap(), c);
    }

    #[test]
    fn rotation_carries_over() {
        let s = sp(2);
        let r = rotation(0.2);
        let pert = BlockPerturbation::new(0, 1, r.clone()).unwrap();
        assert!((pert.conjugate_block(&s).unwrap() - &r).abs().max() < 1e-15);
    }

    #[test]
    fn delta_formula_example() {
        let s = sp(2);
        let pert = BlockPerturbation::from_coefficients(0, 1, 2.0, 0.0, 0.0, 3.0).unwrap();
        assert_eq!(pert.det(), 6.0);
        let bt = pert.conjugate_block(&s).unwrap();
        assert!((bt[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((bt[(1, 1)] - 1.0 / 3.0).abs() < 1e-15);
        let out = realize_in_coords(&s, &s.identity(), &pert).unwrap();
        assert!(s.symplectic_residual(&out).unwrap() < 1e-15);
    }

    #[test]
    fn every_index_pattern_is_symplectic() {
        let s = sp(3);
        let c = s.diagonal(&[4.0, 2.0, 1.5]);
        for j in 0..6 {
            for k in (j + 1)..6 {
                let pert = BlockPerturbation::from_coefficients(j, k, 1.1, 0.3, -0.2, 0.9).unwrap();
                let pert = if k == s.star(j) { BlockPerturbation::new(j, k, rotation(0.3)).unwrap() } else { pert };
                let out = realize_in_coords(&s, &c, &pert).unwrap();
                assert!(s.symplectic_residual(&out).unwrap() < 1e-14, "pair ({j},{k})");
            }
        }
    }

    #[test]
    fn frame_realization_matches_coords() {
        let s = sp(2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = s.random_symplectic(&mut rng, 0.4);
        let pert = BlockPerturbation::new(0, 2, rotation(0.1)).unwrap();
        let amb = realize_at(&s, &p, &pert).unwrap();
        let c = realize_in_coords(&s, &s.identity(), &pert).unwrap();
        assert!((&amb - &p * c * s.symplectic_inverse(&p)).abs().max() < 1e-12);
        assert!(s.symplectic_residual(&amb).unwrap() < 1e-12);
    }

    #[test]
    fn straighten_isotropic() {
        let s = sp(2);
        let basis = s.identity();
        let et = 0.1 * s.basis_vector(0) + s.basis_vector(1);
        let st = straighten(&s, &basis, 0, 1, &et, 0.5).unwrap();
        assert!((&st.p * s.basis_vector(0) - s.basis_vector(0)).norm() < 1e-15);
        assert!((&st.p * &et - s.basis_vector(1)).norm() < 1e-15);
        assert_eq!(st.omega, 0.0);
        assert!(s.symplectic_residual(&st.p).unwrap() < 1e-15);
    }

    #[test]
    fn straighten_symplectic_plane() {
        let s = sp(2);
        let basis = s.identity();
        let et = 0.05 * s.basis_vector(0) + 0.98 * s.basis_vector(3);
        let st = straighten(&s, &basis, 0, 3, &et, 0.5).unwrap();
        assert!((st.omega - 0.98).abs() < 1e-15);
        assert!((&st.p * s.basis_vector(0) - 0.98 * s.basis_vector(0)).norm() < 1e-15);
        assert!((&st.p * &et - s.basis_vector(3)).norm() < 1e-15);
        assert!(s.symplectic_residual(&st.p).unwrap() < 1e-15);
        let far = s.basis_vector(0) + 0.1 * s.basis_vector(3);
        assert!(straighten(&s, &basis, 0, 3, &far, 0.5).is_err());
    }
}
