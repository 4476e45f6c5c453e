//! Transitions exchanging two adjacent eigenlines of the designated orbit,
//! obtained by passing through an orbit whose period map rotates the plane
//! of those lines.

use super::align::{adapted_transition, AlignOptions, AlignStep};
use super::{OrbitData, TrackedWord};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat, Vector};
use crate::perturbation::{realize_at, straighten, BlockPerturbation};
use crate::symplectic::{rotation, SymplecticSpace};
use std::f64::consts::{FRAC_PI_2, PI};

/// Angle tolerance of a verified image table.
pub const TABLE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy)]
pub struct SwapOptions {
    pub align: AlignOptions,
    /// Cap on the periods of the rotating orbit and of the designated orbit.
    pub cap: usize,
    /// Largest letter change allowed for each straightening.
    pub budget: f64,
    /// Largest letter change allowed for speeding up the rotation.
    pub spin_budget: f64,
    /// Rotation angle (distance to a multiple of π) below which the pair is
    /// spun faster.
    pub min_turn: f64,
}

impl Default for SwapOptions {
    fn default() -> Self {
        SwapOptions { align: AlignOptions::default(), cap: 5000, budget: 0.05, spin_budget: 0.0, min_turn: 0.05 }
    }
}

/// Images of the eigenlines `f_j` under a candidate swap for index `i`.
#[derive(Debug, Clone)]
pub struct ImageTable {
    /// Expected target line of each `f_j`.
    pub perm: Vec<usize>,
    /// Angle between the image of `f_j` and `f_{perm[j]}`.
    pub angles: Vec<f64>,
    /// Relative coordinate of the image of `f_{i*}` on `f_{i*}` itself;
    /// the symplectic form forces it to vanish.
    pub r: f64,
}

impl ImageTable {
    pub fn max_angle(&self) -> f64 {
        self.angles.iter().cloned().fold(0.0, f64::max)
    }

    pub fn holds(&self) -> bool {
        self.max_angle() <= TABLE_TOL
    }
}

/// Permutation of ranks exchanging `i − 1 ↔ i` and their conjugates (0-based).
pub fn swap_permutation(space: &SymplecticSpace, i: usize) -> Vec<usize> {
    let d = space.dim();
    let (a, b) = (i - 1, i);
    let mut perm: Vec<usize> = (0..d).collect();
    perm.swap(a, b);
    let (sa, sb) = (space.star(a), space.star(b));
    if sa != b {
        perm.swap(sa, sb);
    }
    perm
}

pub fn swap_image_table(space: &SymplecticSpace, basis: &Mat, i: usize, t: &Mat) -> Result<ImageTable> {
    let d = space.dim();
    if i == 0 || i >= d {
        return Err(Error::Invalid(format!("swap index {i} outside 1..{}", d - 1)));
    }
    let perm = swap_permutation(space, i);
    let angles =
        (0..d).map(|j| linalg::line_angle(&(t * basis.column(j)), &basis.column(perm[j]).into_owned())).collect();
    let sa = space.star(i - 1);
    let img = space.symplectic_inverse(basis) * (t * basis.column(sa));
    let r = img[sa].abs() / img.norm();
    Ok(ImageTable { perm, angles, r })
}

#[derive(Debug, Clone)]
pub struct SwapCertificate {
    /// 1-based index: lines `i` and `i + 1` are exchanged.
    pub i: usize,
    pub matrix: Mat,
    pub word: TrackedWord,
    pub table: ImageTable,
    /// Periods of the rotating orbit and of the designated orbit inserted.
    pub k: usize,
    pub m: usize,
    pub spin: f64,
    pub straighten_changes: [f64; 2],
    pub forward: Vec<AlignStep>,
    pub backward: Vec<AlignStep>,
}

impl SwapCertificate {
    /// Wraps an explicit word after checking its image table.
    pub fn from_word(space: &SymplecticSpace, basis: &Mat, i: usize, word: TrackedWord) -> Result<Self> {
        let matrix = word.matrix(space.dim());
        let table = swap_image_table(space, basis, i, &matrix)?;
        if !table.holds() {
            return Err(Error::stage("swap", format!("image table off by {:.3e}", table.max_angle())));
        }
        Ok(SwapCertificate {
            i,
            matrix,
            word,
            table,
            k: 0,
            m: 0,
            spin: 0.0,
            straighten_changes: [0.0, 0.0],
            forward: Vec::new(),
            backward: Vec::new(),
        })
    }
}

/// Spreads a rotation by `angle` of the complex-pair plane at ranks
/// `(i, i + 1)` over the letters of the orbit: letter `t` is composed on
/// the right with the rotation by `angle / period` written in the adapted
/// basis transported to point `t` (and compensated on the conjugate plane).
/// The period map becomes `basis · C R · basis⁻¹`. Returns the new data and
/// the largest letter change.
pub fn spin_pair(space: &SymplecticSpace, data: &OrbitData, i: usize, angle: f64) -> Result<(OrbitData, f64)> {
    let a = i - 1;
    if !data.blocks.iter().any(|b| b.start == a && b.dim == 2) {
        return Err(Error::Hypothesis(format!("no complex pair at ranks ({i}, {})", i + 1)));
    }
    let period = data.orbit.period();
    let pert = BlockPerturbation::new(a, a + 1, rotation(angle / period as f64))?;
    let mut orbit = data.orbit.clone();
    let mut frame = data.basis.clone();
    let mut change = 0.0_f64;
    for letter in orbit.letters.iter_mut() {
        let new = &*letter * realize_at(space, &frame, &pert)?;
        frame = &*letter * frame;
        change = change.max(linalg::op_norm(&(&new - &*letter)));
        *letter = new;
    }
    let out = OrbitData::new(space, orbit, data.reference.clone())?;
    if !out.blocks.iter().any(|b| b.start == a && b.dim == 2) {
        return Err(Error::Hypothesis(format!("spin broke the pair at ranks ({i}, {})", i + 1)));
    }
    Ok((out, change))
}

/// Distance of the rotation angle of the pair at rank `i` from a multiple
/// of π.
fn turn(data: &OrbitData, i: usize) -> f64 {
    let alpha = data.spectrum[i - 1].arg();
    (alpha - (alpha / PI).round() * PI).abs()
}

/// Spins the pair as far as the budget allows, up to a turn of `min_turn`.
fn spin_up(space: &SymplecticSpace, pi: &OrbitData, i: usize, opts: &SwapOptions) -> Result<(OrbitData, f64)> {
    let d = turn(pi, i);
    if d >= opts.min_turn || opts.spin_budget <= 0.0 {
        return Ok((pi.clone(), 0.0));
    }
    let admissible = |x: f64| spin_pair(space, pi, i, x).ok().filter(|(o, c)| *c <= opts.spin_budget && turn(o, i) > d);
    let mut best: Option<(f64, OrbitData)> = None;
    for sign in [1.0, -1.0] {
        // Bisect on the spin size; the turn grows with it up to the target.
        let (mut lo, mut hi) = (0.0, 2.0 * opts.min_turn);
        let mut found = None;
        for _ in 0..30 {
            let mid = 0.5 * (lo + hi);
            match admissible(sign * mid) {
                Some((o, _)) if turn(&o, i) <= opts.min_turn => {
                    lo = mid;
                    found = Some((sign * mid, o));
                }
                Some((o, _)) => {
                    hi = mid;
                    found = Some((sign * mid, o));
                }
                None => hi = mid,
            }
        }
        if let Some((x, o)) = found {
            if best.as_ref().is_none_or(|(_, b)| turn(&o, i) > turn(b, i)) {
                best = Some((x, o));
            }
        }
    }
    Ok(match best {
        Some((x, o)) => (o, x),
        None => (pi.clone(), 0.0),
    })
}

/// Largest spin of one sign whose letter change fits `budget`.
fn max_spin(space: &SymplecticSpace, pi: &OrbitData, i: usize, sign: f64, budget: f64) -> f64 {
    let fits = |x: f64| spin_pair(space, pi, i, sign * x).is_ok_and(|(_, c)| c <= budget);
    let (mut lo, mut hi) = (0.0, FRAC_PI_2);
    if fits(hi) {
        return hi;
    }
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if fits(mid) {
            lo = mid
        } else {
            hi = mid
        }
    }
    lo
}

/// Signed angle from line `u` to line `v` in a plane, in `(−π/2, π/2]`.
fn signed_line_angle(u: &[f64; 2], v: &[f64; 2]) -> f64 {
    let mut x = v[1].atan2(v[0]) - u[1].atan2(u[0]);
    while x > FRAC_PI_2 {
        x -= PI;
    }
    while x <= -FRAC_PI_2 {
        x += PI;
    }
    x
}

/// Finds the smallest period count `k` and a spin `ψ` within budget such
/// that `k` turns of the spun period map carry the line `start` of the
/// pair plane exactly onto the line `target`.
fn tune_spin(
    space: &SymplecticSpace,
    pi: &OrbitData,
    i: usize,
    start: &Vector,
    target: &Vector,
    opts: &SwapOptions,
) -> Option<(f64, usize)> {
    let a = i - 1;
    let block = pi.blocks.iter().find(|b| b.start == a && b.dim == 2)?;
    let q = linalg::orthonormal_basis(&pi.block_basis(block), 1e-12);
    if q.ncols() != 2 {
        return None;
    }
    let coords = |v: &Vector| -> [f64; 2] {
        let c = q.transpose() * v;
        [c[0], c[1]]
    };
    let (v0, t) = (coords(start), coords(target));
    let lo = -max_spin(space, pi, i, -1.0, opts.spin_budget);
    let hi = max_spin(space, pi, i, 1.0, opts.spin_budget);
    let plane_map = |psi: f64| -> Option<Mat> {
        let pert = BlockPerturbation::new(a, a + 1, rotation(psi)).ok()?;
        let m = &pi.period_map * realize_at(space, &pi.basis, &pert).ok()?;
        let k = q.transpose() * m * &q;
        let tr = k.trace();
        (tr * tr < 4.0 * k.determinant()).then_some(k)
    };
    let miss = |psi: f64, k: usize| -> Option<f64> {
        let m = plane_map(psi)?;
        let mut v = Vector::from_vec(v0.to_vec());
        for _ in 0..k {
            v = &m * v;
            v /= v.norm();
        }
        Some(signed_line_angle(&t, &[v[0], v[1]]))
    };
    const GRID: usize = 64;
    let grid: Vec<f64> = (0..=GRID).map(|g| lo + (hi - lo) * g as f64 / GRID as f64).collect();
    for k in 0..=opts.cap.min(400) {
        let vals: Vec<Option<f64>> = grid.iter().map(|&x| miss(x, k)).collect();
        let mut roots = Vec::new();
        for g in 0..GRID {
            let (Some(f0), Some(f1)) = (vals[g], vals[g + 1]) else { continue };
            if f0.signum() == f1.signum() || f0.abs() > 0.5 || f1.abs() > 0.5 {
                continue;
            }
            let (mut x0, mut x1, mut y0) = (grid[g], grid[g + 1], f0);
            for _ in 0..80 {
                let mid = 0.5 * (x0 + x1);
                let Some(y) = miss(mid, k) else { break };
                if y.signum() == y0.signum() {
                    x0 = mid;
                    y0 = y;
                } else {
                    x1 = mid;
                }
            }
            roots.push(0.5 * (x0 + x1));
        }
        if let Some(r) = roots.into_iter().min_by(|x, y| x.abs().total_cmp(&y.abs())) {
            return Some((r, k));
        }
    }
    None
}

/// The line spanned by `v` projected onto `f_a ⊕ f_b`, with the relative
/// size of the discarded part.
fn project_plane(inv: &Mat, basis: &Mat, a: usize, b: usize, v: &Vector) -> (Vector, f64) {
    let c = inv * v;
    let kept = basis.column(a) * c[a] + basis.column(b) * c[b];
    let off = (0..c.len()).filter(|&m| m != a && m != b).map(|m| c[m] * c[m]).sum::<f64>().sqrt();
    (kept, off / c.norm())
}

/// Rescales `v` to unit coordinate on `f_j`, which keeps a symplectic-plane
/// straightening close to the identity.
fn unit_on(inv: &Mat, j: usize, v: &Vector) -> Vector {
    let c = (inv * v)[j];
    if c == 0.0 {
        v.clone()
    } else {
        v / c
    }
}

/// `m` periods of `p` whose letters carry equal shares of the shear
/// `e_b ↦ e_b + c e_a` in the adapted basis, realized in the transported
/// frames. Returns the letters and the largest letter change.
fn distributed_shear(
    space: &SymplecticSpace,
    p: &OrbitData,
    a: usize,
    b: usize,
    c: f64,
    m: usize,
) -> Result<(Vec<Mat>, f64)> {
    let steps = (m * p.orbit.period()) as f64;
    let pert = BlockPerturbation::new(a, b, Mat::from_row_slice(2, 2, &[1.0, c / steps, 0.0, 1.0]))?;
    let mut frame = p.basis.clone();
    let mut letters = Vec::with_capacity(m * p.orbit.period());
    let mut change = 0.0_f64;
    for _ in 0..m {
        for letter in &p.orbit.letters {
            let new = letter * realize_at(space, &frame, &pert)?;
            change = change.max(linalg::op_norm(&(&new - letter)));
            frame = letter * frame;
            letters.push(new);
        }
    }
    Ok((letters, change))
}

/// Builds a transition from the designated orbit `p` to itself whose matrix
/// exchanges the eigenlines of ranks `i` and `i + 1` and those of their
/// conjugates. The word runs `p → p_i`, around `p_i` a number of times,
/// back to `p` and around `p`. The first straightening is composed on the
/// letter closing the return transition; the second is spread over the
/// final periods of `p`.
pub fn swap_transition(
    space: &SymplecticSpace,
    p: &OrbitData,
    pi: &OrbitData,
    i: usize,
    forward: &TrackedWord,
    backward: &TrackedWord,
    opts: &SwapOptions,
) -> Result<SwapCertificate> {
    let d = space.dim();
    if i == 0 || i >= d {
        return Err(Error::Invalid(format!("swap index {i} outside 1..{}", d - 1)));
    }
    let (a, b) = (i - 1, i);
    let pinv = space.symplectic_inverse(&p.basis);
    // The spin keeps the block spaces of p_i, so the adapted transitions
    // found before it still align; they are recomputed for the spun orbit.
    let (fa, ba) = adapted_transition(space, p, pi, i, forward, backward, &opts.align)?;
    let tuned = if opts.spin_budget > 0.0 {
        let start = &fa.matrix * p.column(b);
        let target = space.symplectic_inverse(&ba.matrix) * p.column(a);
        tune_spin(space, pi, i, &start, &target, opts)
    } else {
        None
    };
    let (pi, spin) = match tuned {
        Some((psi, _)) => (spin_pair(space, pi, i, psi)?.0, psi),
        None => spin_up(space, pi, i, opts)?,
    };
    let (fa, ba) =
        if spin != 0.0 { adapted_transition(space, p, &pi, i, forward, backward, &opts.align)? } else { (fa, ba) };
    let off_tol = 1e-6;

    // Turn the image of f_b until it lies close to f_a.
    let mut v = &fa.matrix * p.column(b);
    let mut chosen = None;
    for k in 0..=opts.cap {
        let img = &ba.matrix * &v;
        let (e, off) = project_plane(&pinv, &p.basis, a, b, &img);
        if off > off_tol {
            return Err(Error::stage("swap", format!("returned line leaves the plane (relative {off:.3e})")));
        }
        if linalg::line_angle(&e, &p.column(a)) < FRAC_PI_2 * 0.5 {
            let st = straighten(space, &p.basis, b, a, &unit_on(&pinv, a, &e), FRAC_PI_2)?;
            let last = if ba.word.is_empty() {
                if k > 0 {
                    pi.orbit.letters.last()
                } else {
                    fa.word.word.letters.last()
                }
            } else {
                ba.word.word.letters.last()
            }
            .ok_or_else(|| Error::Invalid("empty swap word".into()))?;
            let change = linalg::op_norm(&(&st.p * last - last));
            if change <= opts.budget {
                chosen = Some((k, st.p, change));
                break;
            }
        }
        v = &pi.period_map * v;
        v /= v.norm();
    }
    let (k, p1, change1) = chosen.ok_or_else(|| Error::IterationCap {
        stage: "swap: rotation".into(),
        cap: opts.cap,
        achieved: f64::NAN,
    })?;
    let mut word = fa.word.clone();
    word.push_orbit(&pi, k, super::PADDING);
    word.append(&ba.word);
    word.compose_last(&p1)?;

    // Straighten the image of f_a onto f_b. The shear is spread over `m`
    // periods of p, one root per letter, so the product is the period power
    // followed by the full shear.
    let t = word.matrix(d);
    let (l, _) = project_plane(&pinv, &p.basis, a, b, &(&t * p.column(a)));
    let coords = &pinv * unit_on(&pinv, b, &l);
    let shear = -coords[a] / coords[b];
    let last = word.word.letters.last().ok_or_else(|| Error::Invalid("empty swap word".into()))?.clone();
    let direct = straighten(space, &p.basis, a, b, &unit_on(&pinv, b, &l), FRAC_PI_2)
        .ok()
        .map(|st| linalg::op_norm(&(&st.p * &last - &last)))
        .filter(|c| *c <= opts.budget);
    let mut chosen = direct.map(|c| (0, Vec::new(), c));
    if chosen.is_none() {
        for m in 1..=opts.cap {
            let (letters, change) = distributed_shear(space, p, a, b, shear, m)?;
            if change <= opts.budget {
                chosen = Some((m, letters, change));
                break;
            }
        }
    }
    let (m, letters, shear_change) =
        chosen.ok_or_else(|| Error::IterationCap { stage: "swap: push".into(), cap: opts.cap, achieved: f64::NAN })?;
    for _ in 0..m {
        word.reference.extend(p.reference.iter().cloned());
        word.word.provenance.extend(std::iter::repeat_n(super::PADDING.to_string(), p.orbit.period()));
    }
    word.word.letters.extend(letters);
    // Exact correction from the final word; after the distributed shear it
    // only removes rounding.
    let t = word.matrix(d);
    let (l, _) = project_plane(&pinv, &p.basis, a, b, &(&t * p.column(a)));
    let p2 = straighten(space, &p.basis, a, b, &unit_on(&pinv, b, &l), FRAC_PI_2)?.p;
    let change2 = if m == 0 { word.compose_last(&p2)? } else { shear_change + word.compose_last(&p2)? };
    if change2 > opts.budget {
        return Err(Error::Budget { stage: "swap: straightening".into(), needed: change2, allowed: opts.budget });
    }

    let table = swap_image_table(space, &p.basis, i, &word.matrix(d))?;
    if !table.holds() {
        return Err(Error::stage("swap", format!("image table off by {:.3e}", table.max_angle())));
    }
    let matrix = word.matrix(d);
    Ok(SwapCertificate {
        i,
        matrix,
        word,
        table,
        k,
        m,
        spin,
        straighten_changes: [change1, change2],
        forward: fa.steps,
        backward: ba.steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocycle::{PeriodicOrbit, TransitionWord};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sp(n: usize) -> SymplecticSpace {
        SymplecticSpace::standard_form(n).unwrap()
    }

    fn data(s: &SymplecticSpace, id: &str, m: Mat) -> OrbitData {
        OrbitData::unperturbed(s, &PeriodicOrbit::new(id, vec![m]).unwrap()).unwrap()
    }

    fn word(from: &str, to: &str, m: Mat) -> TrackedWord {
        TrackedWord::new(TransitionWord::new(from, to, vec![m]))
    }

    fn frame(s: &SymplecticSpace, seed: u64) -> Mat {
        s.random_symplectic(&mut ChaCha8Rng::seed_from_u64(seed), 0.2)
    }

    fn near(s: &SymplecticSpace, seed: u64) -> Mat {
        s.random_symplectic(&mut ChaCha8Rng::seed_from_u64(seed), 0.01)
    }

    fn conj(s: &SymplecticSpace, q: &Mat, m: &Mat) -> Mat {
        q * m * s.symplectic_inverse(q)
    }

    #[test]
    fn quarter_turn_swaps_in_dimension_two() {
        let s = sp(1);
        let t = Mat::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert!(s.symplectic_residual(&t).unwrap() == 0.0);
        let table = swap_image_table(&s, &s.identity(), 1, &t).unwrap();
        assert!(table.holds());
        assert_eq!(table.perm, vec![1, 0]);
        let w = word("p", "p", t);
        assert!(SwapCertificate::from_word(&s, &s.identity(), 1, w).is_ok());
        let bad = word("p", "p", rotation(0.3));
        assert!(SwapCertificate::from_word(&s, &s.identity(), 1, bad).is_err());
    }

    #[test]
    fn distributed_shear_telescopes() {
        let s = sp(2);
        let q = frame(&s, 7);
        let m = conj(&s, &q, &s.diagonal(&[1.3, 1.1]));
        let letters = vec![m.clone(), s.symplectic_inverse(&m), m.clone()];
        let p = OrbitData::unperturbed(&s, &PeriodicOrbit::new("p", letters).unwrap()).unwrap();
        let (out, change) = distributed_shear(&s, &p, 0, 1, 0.3, 2).unwrap();
        assert_eq!(out.len(), 6);
        let product = out.iter().fold(s.identity(), |acc, l| l * acc);
        let shear = BlockPerturbation::new(0, 1, Mat::from_row_slice(2, 2, &[1.0, 0.3, 0.0, 1.0])).unwrap();
        let expected = &p.period_map * &p.period_map * realize_at(&s, &p.basis, &shear).unwrap();
        assert!((product - expected).amax() < 1e-12);
        assert!(change < 0.3);
        let (_, finer) = distributed_shear(&s, &p, 0, 1, 0.3, 4).unwrap();
        assert!(finer < change);
    }

    #[test]
    fn spin_adds_rotation() {
        let s = sp(2);
        let mut m = Mat::zeros(4, 4);
        m[(0, 0)] = 1.2;
        m.view_mut((1, 1), (2, 2)).copy_from(&rotation(0.01));
        m[(3, 3)] = 1.0 / 1.2;
        let q = frame(&s, 4);
        let pi = data(&s, "q", conj(&s, &q, &m));
        let (plus, change) = spin_pair(&s, &pi, 2, 0.04).unwrap();
        let (minus, _) = spin_pair(&s, &pi, 2, -0.04).unwrap();
        let turned = plus.spectrum[1].arg().abs().max(minus.spectrum[1].arg().abs());
        assert!(turned > 0.04, "{turned}");
        assert!((plus.spectrum[0].re - 1.0 / 1.2).abs() < 1e-10);
        assert!(change < 0.1);
        assert!(s.symplectic_residual(&plus.orbit.letters[0]).unwrap() < 1e-12);
    }

    #[test]
    fn dimension_two_swap() {
        let s = sp(1);
        let q = frame(&s, 1);
        let p = data(&s, "p", conj(&s, &q, &s.diagonal(&[1.02])));
        let pi = data(&s, "p", conj(&s, &q, &(rotation(0.1) * s.diagonal(&[1.01]))));
        let opts =
            SwapOptions { align: AlignOptions { budget: Some(0.05), ..Default::default() }, ..Default::default() };
        let c =
            swap_transition(&s, &p, &pi, 1, &word("p", "p", near(&s, 2)), &word("p", "p", near(&s, 3)), &opts).unwrap();
        assert!(c.table.holds(), "{:?}", c.table);
        assert!(c.table.r < 1e-8);
        for l in &c.word.word.letters {
            assert!(s.symplectic_residual(l).unwrap() < 1e-10);
        }
    }

    fn four_dim_case(i: usize) -> SwapCertificate {
        let s = sp(2);
        let q = frame(&s, 5);
        let p = data(&s, "p", conj(&s, &q, &s.diagonal(&[1.06, 1.03])));
        let mut m = Mat::zeros(4, 4);
        match i {
            2 => {
                m[(0, 0)] = 1.05;
                m.view_mut((1, 1), (2, 2)).copy_from(&rotation(0.2));
                m[(3, 3)] = 1.0 / 1.05;
            }
            _ => {
                m.view_mut((0, 0), (2, 2)).copy_from(&(rotation(0.2) * 1.04));
                m.view_mut((2, 2), (2, 2)).copy_from(&(rotation(-0.2) / 1.04));
            }
        }
        let pi = data(&s, "q", conj(&s, &q, &m));
        let opts =
            SwapOptions { align: AlignOptions { budget: Some(0.05), ..Default::default() }, ..Default::default() };
        swap_transition(&s, &p, &pi, i, &word("p", "q", near(&s, 6)), &word("q", "p", near(&s, 7)), &opts).unwrap()
    }

    #[test]
    fn middle_swap_in_dimension_four() {
        let c = four_dim_case(2);
        assert!(c.table.holds(), "{:?}", c.table);
        assert_eq!(c.table.perm, vec![0, 2, 1, 3]);
    }

    #[test]
    fn outer_swap_forces_conjugate_swap() {
        for i in [1, 3] {
            let c = four_dim_case(i);
            assert!(c.table.holds(), "{:?}", c.table);
            assert_eq!(c.table.perm, vec![1, 0, 3, 2]);
            assert!(c.table.r < 1e-8, "r = {}", c.table.r);
        }
    }
}
