//! Transition words and the constructions built from them: subspace
//! alignment, eigenline swaps and the identity word.
//!
//! Ranks are 1-based in public signatures (`swap_transition(.., i, ..)`)
//! and 0-based in [`Block`] and basis column indices.

mod align;
mod elliptic;
mod swap;

pub use align::{adapted_transition, align_extremes, align_level, align_top, AlignOptions, AlignStep, Aligned};
pub use elliptic::{elliptic_word, EllipticWord, PAIRING_TOL};
pub use swap::{
    spin_pair, swap_image_table, swap_permutation, swap_transition, ImageTable, SwapCertificate, SwapOptions, TABLE_TOL,
};

use crate::cocycle::{PeriodicOrbit, TransitionWord};
use crate::domination::sorted_spectrum;
use crate::error::{Error, Result};
use crate::linalg::{self, Mat, Vector, C64};
use crate::symplectic::SymplecticSpace;

pub const ORIGINAL: &str = "original";
pub const CORRECTOR: &str = "corrector";
pub const PADDING: &str = "padding";

/// `t_jk` (from `k` to `j`) followed by `t_ij` (from `j` to `i`).
pub fn compose_transitions(t_ij: &TransitionWord, t_jk: &TransitionWord) -> Result<TransitionWord> {
    if t_jk.to != t_ij.from {
        return Err(Error::Invalid(format!(
            "cannot chain {} -> {} with {} -> {}",
            t_jk.from, t_jk.to, t_ij.from, t_ij.to
        )));
    }
    let mut letters = t_jk.letters.clone();
    letters.extend(t_ij.letters.iter().cloned());
    let mut provenance = t_jk.provenance.clone();
    provenance.extend(t_ij.provenance.iter().cloned());
    Ok(TransitionWord {
        from: t_jk.from.clone(),
        to: t_ij.to.clone(),
        letters,
        epsilon: t_ij.epsilon.max(t_jk.epsilon),
        provenance,
    })
}

/// `orbit_j^β`, then `t_ij`, then `orbit_i^α`; the matrix is `M_iᵅ T M_jᵝ`.
pub fn pad_transition(
    orbit_i: &PeriodicOrbit,
    t_ij: &TransitionWord,
    orbit_j: &PeriodicOrbit,
    alpha: usize,
    beta: usize,
) -> TransitionWord {
    let mut letters = Vec::with_capacity(t_ij.len() + alpha * orbit_i.period() + beta * orbit_j.period());
    let mut provenance = Vec::with_capacity(letters.capacity());
    for _ in 0..beta {
        letters.extend(orbit_j.letters.iter().cloned());
        provenance.extend(std::iter::repeat_n(PADDING.to_string(), orbit_j.period()));
    }
    letters.extend(t_ij.letters.iter().cloned());
    provenance.extend(t_ij.provenance.iter().cloned());
    for _ in 0..alpha {
        letters.extend(orbit_i.letters.iter().cloned());
        provenance.extend(std::iter::repeat_n(PADDING.to_string(), orbit_i.period()));
    }
    TransitionWord { from: t_ij.from.clone(), to: t_ij.to.clone(), letters, epsilon: t_ij.epsilon, provenance }
}

/// A constructed word paired letter by letter with the unperturbed letters
/// it replaces.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackedWord {
    pub word: TransitionWord,
    pub reference: Vec<Mat>,
}

impl TrackedWord {
    pub fn new(word: TransitionWord) -> Self {
        let reference = word.letters.clone();
        TrackedWord { word, reference }
    }

    pub fn empty(from: &str, to: &str) -> Self {
        TrackedWord::new(TransitionWord::new(from, to, Vec::new()))
    }

    /// `k` periods of an orbit.
    pub fn orbit_power(data: &OrbitData, k: usize) -> Self {
        let mut w = TrackedWord::empty(&data.orbit.id, &data.orbit.id);
        w.push_orbit(data, k, PADDING);
        w
    }

    pub fn len(&self) -> usize {
        self.word.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.word.letters.is_empty()
    }

    pub fn matrix(&self, dim: usize) -> Mat {
        self.word.matrix(dim)
    }

    /// Largest letter-wise operator distance from the reference.
    pub fn distance(&self) -> f64 {
        self.word.letters.iter().zip(&self.reference).map(|(a, b)| linalg::op_norm(&(a - b))).fold(0.0, f64::max)
    }

    pub fn push_orbit(&mut self, data: &OrbitData, k: usize, tag: &str) {
        for _ in 0..k {
            self.word.letters.extend(data.orbit.letters.iter().cloned());
            self.reference.extend(data.reference.iter().cloned());
            self.word.provenance.extend(std::iter::repeat_n(tag.to_string(), data.orbit.period()));
        }
    }

    pub fn prepend_orbit(&mut self, data: &OrbitData, k: usize) {
        let mut head = TrackedWord::orbit_power(data, k);
        head.word.to = self.word.to.clone();
        head.append(self);
        head.word.from = data.orbit.id.clone();
        *self = head;
    }

    pub fn append(&mut self, other: &TrackedWord) {
        self.word.letters.extend(other.word.letters.iter().cloned());
        self.word.provenance.extend(other.word.provenance.iter().cloned());
        self.reference.extend(other.reference.iter().cloned());
        self.word.to = other.word.to.clone();
        self.word.epsilon = self.word.epsilon.max(other.word.epsilon);
    }

    pub fn repeat(&self, k: usize) -> TrackedWord {
        let mut out = TrackedWord::empty(&self.word.from, &self.word.from);
        for _ in 0..k {
            out.append(self);
        }
        out
    }

    /// Replaces the first letter `A` by `A Q`. Returns the letter change.
    pub fn compose_first(&mut self, q: &Mat) -> Result<f64> {
        let a = self.word.letters.first_mut().ok_or_else(|| Error::Invalid("empty word".into()))?;
        let new = &*a * q;
        let change = linalg::op_norm(&(&new - &*a));
        *a = new;
        self.word.provenance[0] = CORRECTOR.to_string();
        Ok(change)
    }

    /// Replaces the last letter `A` by `Q A`. Returns the letter change.
    pub fn compose_last(&mut self, q: &Mat) -> Result<f64> {
        let a = self.word.letters.last_mut().ok_or_else(|| Error::Invalid("empty word".into()))?;
        let new = q * &*a;
        let change = linalg::op_norm(&(&new - &*a));
        *a = new;
        *self.word.provenance.last_mut().unwrap() = CORRECTOR.to_string();
        Ok(change)
    }
}

/// A group of consecutive spectral ranks: a real eigenline (`dim = 1`) or
/// the real plane of a conjugate pair (`dim = 2`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub start: usize,
    pub dim: usize,
}

impl Block {
    pub fn ranks(&self) -> Vec<usize> {
        (self.start..self.start + self.dim).collect()
    }

    pub fn end(&self) -> usize {
        self.start + self.dim
    }
}

/// An orbit prepared for the constructions: perturbed letters, the
/// unperturbed ones, and a symplectic basis of the period map adapted to
/// its spectral blocks (columns in rank order, `ω(b_k, b_{k*}) = ±1`).
#[derive(Debug, Clone)]
pub struct OrbitData {
    pub orbit: PeriodicOrbit,
    pub reference: Vec<Mat>,
    pub period_map: Mat,
    pub spectrum: Vec<C64>,
    pub blocks: Vec<Block>,
    pub basis: Mat,
}

impl OrbitData {
    /// Unperturbed orbit.
    pub fn unperturbed(space: &SymplecticSpace, orbit: &PeriodicOrbit) -> Result<Self> {
        OrbitData::new(space, orbit.clone(), orbit.letters.clone())
    }

    pub fn new(space: &SymplecticSpace, orbit: PeriodicOrbit, reference: Vec<Mat>) -> Result<Self> {
        if orbit.dim() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), found: orbit.dim() });
        }
        if reference.len() != orbit.period() {
            return Err(Error::LengthMismatch(reference.len(), orbit.period()));
        }
        let period_map = orbit.product();
        let spectrum = sorted_spectrum(&period_map);
        let blocks = detect_blocks(&spectrum)?;
        let basis = adapted_basis(space, &period_map, &spectrum, &blocks)?;
        Ok(OrbitData { orbit, reference, period_map, spectrum, blocks, basis })
    }

    pub fn id(&self) -> &str {
        &self.orbit.id
    }

    pub fn column(&self, k: usize) -> Vector {
        self.basis.column(k).into_owned()
    }

    pub fn block_basis(&self, b: &Block) -> Mat {
        linalg::columns(&self.basis, &b.ranks())
    }

    /// True when every block is a real line.
    pub fn is_real(&self) -> bool {
        self.blocks.iter().all(|b| b.dim == 1)
    }
}

fn detect_blocks(ev: &[C64]) -> Result<Vec<Block>> {
    let scale = ev.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let tol = 1e-9 * scale;
    let mut blocks = Vec::new();
    let mut k = 0;
    while k < ev.len() {
        if ev[k].im.abs() > tol {
            if k + 1 >= ev.len() || (ev[k] - ev[k + 1].conj()).norm() > 1e-7 * scale {
                return Err(Error::Hypothesis(format!("eigenvalue at rank {} has no conjugate neighbour", k + 1)));
            }
            blocks.push(Block { start: k, dim: 2 });
            k += 2;
        } else {
            blocks.push(Block { start: k, dim: 1 });
            k += 1;
        }
    }
    for w in blocks.windows(2) {
        let lo = ev[w[0].start].norm();
        let hi = ev[w[1].start].norm();
        if hi - lo <= tol {
            return Err(Error::Hypothesis(format!(
                "ranks {} and {} share the modulus {lo:.6}",
                w[0].start + 1,
                w[1].start + 1
            )));
        }
    }
    Ok(blocks)
}

fn conjugate_block(blocks: &[Block], b: &Block, d: usize) -> Result<Block> {
    let start = d - b.start - b.dim;
    blocks
        .iter()
        .copied()
        .find(|c| c.start == start && c.dim == b.dim)
        .ok_or_else(|| Error::Hypothesis(format!("block at rank {} has no conjugate block", b.start + 1)))
}

fn block_space(m: &Mat, ev: &[C64], b: &Block) -> Mat {
    if b.dim == 1 {
        linalg::span(&[linalg::real_eigenvector(m, ev[b.start].re)])
    } else {
        linalg::orthonormal_basis(&linalg::pair_kernel(m, ev[b.start], ev[b.start + 1]), 1e-12)
    }
}

fn adapted_basis(space: &SymplecticSpace, m: &Mat, ev: &[C64], blocks: &[Block]) -> Result<Mat> {
    let d = space.dim();
    let mut basis = Mat::zeros(d, d);
    for b in blocks {
        let c = conjugate_block(blocks, b, d)?;
        if c.start < b.start {
            continue;
        }
        let u = block_space(m, ev, b);
        if u.ncols() != b.dim {
            return Err(Error::DegenerateBasis(format!("block at rank {} is not spanned", b.start + 1)));
        }
        if c == *b {
            // Symplectic plane of a unit-modulus pair.
            let e = u.column(0).into_owned();
            let f = u.column(1).into_owned();
            let w = space.omega(&e, &f);
            if w.abs() < 1e-12 {
                return Err(Error::DegenerateBasis(format!("plane at rank {} is isotropic", b.start + 1)));
            }
            basis.set_column(b.start, &e);
            basis.set_column(b.start + 1, &(f / w));
            continue;
        }
        let v = block_space(m, ev, &c);
        // Dual basis of the conjugate block: ω(u_a, v'_b) = δ_ab.
        let g = u.transpose() * &space.j * &v;
        let gi = linalg::inverse(&g).ok_or_else(|| {
            Error::DegenerateBasis(format!("blocks at ranks {} and {} pair degenerately", b.start + 1, c.start + 1))
        })?;
        let vd = &v * gi;
        for a in 0..b.dim {
            let r = b.start + a;
            basis.set_column(r, &u.column(a));
            basis.set_column(space.star(r), &vd.column(a));
        }
    }
    let defect = linalg::max_abs(&(space.omega_table(&basis) - &space.j));
    if defect > 1e-8 {
        return Err(Error::DegenerateBasis(format!("adapted basis ω-defect {defect:.3e}")));
    }
    Ok(basis)
}

/// Symplectic map `Ĩ` fixing the basis except at the anchor indices:
/// `Ĩ(b_a) = u_a` for each anchor `a` (the columns of `targets`, in anchor
/// order), `Ĩ(b_{a*}) = b_{a*}` and, for every other `k`,
/// `Ĩ(b_k) = b_k − Σ_a ω(u_a, b_k)/ω(b_a, b_{a*}) · b_{a*}`.
///
/// Each `u_a` must have coordinate one on `b_a` and zero on the other
/// anchors, and the `u_a` must span an isotropic subspace.
pub fn multi_transvection(space: &SymplecticSpace, basis: &Mat, anchors: &[usize], targets: &Mat) -> Result<Mat> {
    let d = space.dim();
    if targets.ncols() != anchors.len() {
        return Err(Error::LengthMismatch(targets.ncols(), anchors.len()));
    }
    let stars: Vec<usize> = anchors.iter().map(|&a| space.star(a)).collect();
    if anchors.iter().any(|a| stars.contains(a)) {
        return Err(Error::Invalid("anchor set meets its conjugate".into()));
    }
    let inv = space.symplectic_inverse(basis);
    let coords = &inv * targets;
    for (c, &a) in anchors.iter().enumerate() {
        for (r, &b) in anchors.iter().enumerate() {
            let want = if r == c { 1.0 } else { 0.0 };
            if (coords[(b, c)] - want).abs() > 1e-9 {
                return Err(Error::Hypothesis(format!("target {c} has coordinate {:.3e} on b_{b}", coords[(b, c)])));
            }
        }
        let _ = a;
    }
    let iso = linalg::max_abs(&space.omega_table(targets));
    if iso > 1e-8 * linalg::max_abs(targets).powi(2).max(1.0) {
        return Err(Error::Hypothesis(format!("targets are not isotropic (defect {iso:.3e})")));
    }
    let mut images = basis.clone();
    for (c, &a) in anchors.iter().enumerate() {
        images.set_column(a, &targets.column(c));
    }
    for k in 0..d {
        if anchors.contains(&k) || stars.contains(&k) {
            continue;
        }
        let bk = basis.column(k).into_owned();
        let mut col = bk.clone();
        for (c, &a) in anchors.iter().enumerate() {
            let u = targets.column(c).into_owned();
            let w = space.omega(&basis.column(a).into_owned(), &basis.column(stars[c]).into_owned());
            col -= basis.column(stars[c]) * (space.omega(&u, &bk) / w);
        }
        images.set_column(k, &col);
    }
    Ok(images * inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::rotation;

    fn sp(n: usize) -> SymplecticSpace {
        SymplecticSpace::standard_form(n).unwrap()
    }

    fn t(from: &str, to: &str, letters: Vec<Mat>) -> TransitionWord {
        TransitionWord::new(from, to, letters)
    }

    #[test]
    fn compose_with_empty_word() {
        let a = t("x", "y", vec![rotation(0.3)]);
        let e = t("x", "x", vec![]);
        let c = compose_transitions(&a, &e).unwrap();
        assert_eq!(c.letters, a.letters);
        assert_eq!((c.from.as_str(), c.to.as_str()), ("x", "y"));
    }

    #[test]
    fn compose_multiplies_in_order() {
        let a = Mat::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 1.0]);
        let b = Mat::from_row_slice(2, 2, &[1.0, 0.0, 3.0, 1.0]);
        let t_yx = t("x", "y", vec![a.clone()]);
        let t_zy = t("y", "z", vec![b.clone()]);
        let c = compose_transitions(&t_zy, &t_yx).unwrap();
        assert_eq!(c.matrix(2), &b * &a);
        assert!(compose_transitions(&t_yx, &t_yx).is_err());
    }

    #[test]
    fn padding_bookkeeping() {
        let oi = PeriodicOrbit::new("i", vec![rotation(0.1), rotation(0.2)]).unwrap();
        let oj = PeriodicOrbit::new("j", vec![rotation(0.4)]).unwrap();
        let w = t("j", "i", vec![Mat::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0])]);
        assert_eq!(pad_transition(&oi, &w, &oj, 0, 0), w);
        let p = pad_transition(&oi, &w, &oj, 2, 1);
        assert_eq!(p.len(), 2 * 2 + 1 + 1);
        let mi = oi.product();
        let want = &mi * &mi * w.matrix(2) * oj.product();
        assert!((p.matrix(2) - want).abs().max() < 1e-14);
    }

    #[test]
    fn adapted_basis_for_complex_blocks() {
        let s = sp(2);
        let mut m = Mat::zeros(4, 4);
        m.view_mut((0, 0), (2, 2)).copy_from(&(rotation(0.5) * 3.0));
        m.view_mut((2, 2), (2, 2)).copy_from(&(rotation(-0.5) / 3.0));
        let q = s.random_symplectic(&mut rand_chacha::ChaCha8Rng::seed_from_u64(3), 0.3);
        let m = &q * m * s.symplectic_inverse(&q);
        let o = PeriodicOrbit::new("p", vec![m.clone()]).unwrap();
        let data = OrbitData::unperturbed(&s, &o).unwrap();
        assert_eq!(data.blocks, vec![Block { start: 0, dim: 2 }, Block { start: 2, dim: 2 }]);
        assert!(linalg::max_abs(&(s.omega_table(&data.basis) - &s.j)) < 1e-10);
        for b in &data.blocks {
            let v = data.block_basis(b);
            assert!(linalg::containment_defect(&(&m * &v), &v) < 1e-10);
        }
    }

    use rand::SeedableRng;

    #[test]
    fn transvection_from_coefficients_is_symplectic() {
        let s = sp(3);
        let basis = s.identity();
        // One anchor, as for extreme lines.
        let mut u = s.basis_vector(0);
        for (k, e) in [(1, 0.01), (2, 0.02), (3, 0.03), (4, 0.04), (5, 0.05)] {
            u[k] = e;
        }
        let i1 = multi_transvection(&s, &basis, &[0], &linalg::span(&[u.clone()])).unwrap();
        assert!(s.symplectic_residual(&i1).unwrap() < 1e-15);
        assert_eq!(i1.column(0).into_owned(), u);
        assert_eq!(i1.column(5).into_owned(), s.basis_vector(5));
        // Every ω-pair of images against the canonical table.
        let table = s.omega_table(&i1);
        for a in 0..6 {
            for b in 0..6 {
                assert!((table[(a, b)] - s.canonical(a, b)).abs() < 1e-15, "({a}, {b})");
            }
        }
    }

    #[test]
    fn transvection_with_two_anchors() {
        let s = sp(3);
        let basis = s.identity();
        // Isotropic pair near (e_0, e_1) with zero mutual anchor coordinates.
        let mut u0 = s.basis_vector(0);
        let mut u1 = s.basis_vector(1);
        u0[2] = 0.01;
        u0[3] = 0.02;
        u1[2] = 0.03;
        u1[3] = 0.015;
        // ω(u0, u1) = 1.5e-4 − 6e-4; cancel it with the free coefficient
        // of u1 on e_{0*} = e_5, since ω(u0, e_5) = 1.
        let w = s.omega(&u0, &u1);
        assert!((w + 4.5e-4).abs() < 1e-15);
        u1[5] = -w;
        assert!(s.omega(&u0, &u1).abs() < 1e-15);
        let i2 = multi_transvection(&s, &basis, &[0, 1], &linalg::span(&[u0.clone(), u1.clone()])).unwrap();
        assert!(s.symplectic_residual(&i2).unwrap() < 1e-15);
        assert_eq!(i2.column(1).into_owned(), u1);
        assert_eq!(i2.column(4).into_owned(), s.basis_vector(4));
        assert_eq!(i2.column(5).into_owned(), s.basis_vector(5));
    }

    #[test]
    fn transvection_rejects_bad_targets() {
        let s = sp(2);
        let basis = s.identity();
        let mut u = s.basis_vector(0);
        u[0] = 2.0;
        assert!(multi_transvection(&s, &basis, &[0], &linalg::span(&[u])).is_err());
        assert!(multi_transvection(&s, &basis, &[0, 3], &Mat::zeros(4, 2)).is_err());
    }
}
