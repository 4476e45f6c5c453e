//! Words from the designated orbit to itself whose matrix is the identity,
//! assembled from eigenline swaps and powers of the period map.

use super::swap::{swap_image_table, swap_permutation, SwapCertificate};
use super::{OrbitData, TrackedWord, PADDING};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::symplectic::SymplecticSpace;

/// Tolerance on `C_j C_{j*} = 1` and on `∏ λ = 1`.
pub const PAIRING_TOL: f64 = 1e-8;
/// Relative off-diagonal size tolerated when reading `μ_{i,j}`.
const DIAGONAL_TOL: f64 = 1e-6;
/// Largest exponent searched for the correction `B_n`.
const N_CAP: usize = 1_000_000;

#[derive(Debug, Clone)]
pub struct EllipticWord {
    pub word: TrackedWord,
    pub matrix: Mat,
    /// `‖Ŵ − I‖`.
    pub residual: f64,
    pub n: usize,
    /// Smallest exponent whose correction fits the budget.
    pub n_min: usize,
    /// Cycle of ranks generated by the swaps, `cycle[j]` is the image of `j`.
    pub cycle: Vec<usize>,
    /// `mu[i][j]` for `i = 0..2N`.
    pub mu: Vec<Vec<f64>>,
    pub c: Vec<f64>,
    /// `max_j |C_j C_{j*} − 1|`.
    pub pairing_defect: f64,
    /// Letter change caused by the correction on the first letter of `p`.
    pub correction_change: f64,
    /// Largest letter-wise distance of the word from its reference.
    pub distance: f64,
}

fn compose_perm(outer: &[usize], inner: &[usize]) -> Vec<usize> {
    inner.iter().map(|&j| outer[j]).collect()
}

fn is_full_cycle(perm: &[usize]) -> bool {
    let mut j = 0;
    for step in 1..=perm.len() {
        j = perm[j];
        if j == 0 {
            return step == perm.len();
        }
    }
    false
}

/// Correction commuting with the period map: eigenvalue `C_j^{-1/n}` on the
/// `j`-th eigenline, paired exactly with its conjugate.
fn correction(space: &SymplecticSpace, basis: &Mat, c: &[f64], n: usize) -> Mat {
    let nh = space.half_dim();
    let mut d = vec![0.0; 2 * nh];
    for j in 0..nh {
        d[j] = c[j].powf(-1.0 / n as f64);
        d[space.star(j)] = 1.0 / d[j];
    }
    basis * Mat::from_diagonal(&linalg::Vector::from_vec(d)) * space.symplectic_inverse(basis)
}

fn correction_change(space: &SymplecticSpace, basis: &Mat, c: &[f64], n: usize, first: &Mat) -> f64 {
    let b = correction(space, basis, c, n);
    linalg::op_norm(&(first * &b - first))
}

/// Smallest `n` whose correction changes `first` by at most `budget`.
fn minimal_n(space: &SymplecticSpace, basis: &Mat, c: &[f64], first: &Mat, budget: f64) -> Option<usize> {
    if correction_change(space, basis, c, N_CAP, first) > budget {
        return None;
    }
    // The change decreases with n; bisect on [1, N_CAP].
    let (mut lo, mut hi) = (0usize, N_CAP);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if correction_change(space, basis, c, mid, first) <= budget {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Assembles the identity word at the designated orbit `p`, whose period map
/// must have simple real spectrum with product one.
///
/// `swaps` must contain a verified swap for each index `1..=N`. They
/// generate the cycle `τ = g_1 ∘ … ∘ g_N` on ranks, and `S_k` is the word of
/// `τ^k`. For each `i` the block `S_{2N−i} Mⁿ S_i S_{2N−i} S_i` fixes every
/// eigenline, multiplying `E_j` by `μ_{i,j}² λ_{τ^i(j)}ⁿ`; over a full cycle
/// the λ factors cancel and the block product acts by `C_j = ∏_i μ_{i,j}²`.
/// The leading `Mⁿ` is replaced by `n` periods whose first letter carries
/// the correction with eigenvalues `C_j^{-1/n}`.
///
/// With `n = None` the smallest exponent meeting `budget` is used; an
/// explicit `n` below it is rejected with that minimum in the error.
pub fn elliptic_word(
    space: &SymplecticSpace,
    p: &OrbitData,
    swaps: &[SwapCertificate],
    n: Option<usize>,
    budget: f64,
) -> Result<EllipticWord> {
    let d = space.dim();
    let nh = space.half_dim();
    if !p.is_real() {
        return Err(Error::Hypothesis("designated period map has non-real spectrum".into()));
    }
    let prod: f64 = p.spectrum.iter().map(|l| l.re).product();
    if (prod - 1.0).abs() > PAIRING_TOL {
        return Err(Error::Hypothesis(format!("eigenvalue product {prod} differs from one")));
    }

    let mut generators = Vec::with_capacity(nh);
    for g in 1..=nh {
        let s = swaps.iter().find(|s| s.i == g).ok_or_else(|| Error::Invalid(format!("missing swap for index {g}")))?;
        let table = swap_image_table(space, &p.basis, g, &s.matrix)?;
        if !table.holds() {
            return Err(Error::stage("elliptic", format!("swap {g} image table off by {:.3e}", table.max_angle())));
        }
        generators.push(s);
    }

    // τ applies g_N first.
    let mut tau_word = TrackedWord::empty(p.id(), p.id());
    let mut tau: Vec<usize> = (0..d).collect();
    for s in generators.iter().rev() {
        tau_word.append(&s.word);
        tau = compose_perm(&swap_permutation(space, s.i), &tau);
    }
    if !is_full_cycle(&tau) {
        return Err(Error::stage("elliptic", format!("swaps generate {tau:?}, not a full cycle")));
    }
    let powers: Vec<TrackedWord> = (0..=d).map(|k| tau_word.repeat(k)).collect();
    let mats: Vec<Mat> = powers.iter().map(|w| w.matrix(d)).collect();

    let inv = space.symplectic_inverse(&p.basis);
    let mut mu = vec![vec![1.0; d]];
    for i in 1..d {
        let x = &inv * &mats[d - i] * &mats[i] * &p.basis;
        let scale = (0..d).map(|j| x[(j, j)].abs()).fold(0.0, f64::max);
        let off = (0..d)
            .flat_map(|r| (0..d).map(move |c| (r, c)))
            .filter(|(r, c)| r != c)
            .map(|(r, c)| x[(r, c)].abs())
            .fold(0.0, f64::max);
        if off > DIAGONAL_TOL * scale {
            return Err(Error::stage(
                "elliptic",
                format!("S_{} S_{i} moves eigenlines (off-diagonal {off:.3e})", d - i),
            ));
        }
        mu.push((0..d).map(|j| x[(j, j)]).collect());
    }
    let c: Vec<f64> = (0..d).map(|j| mu.iter().map(|m| m[j] * m[j]).product()).collect();
    let pairing_defect = (0..d).map(|j| (c[j] * c[space.star(j)] - 1.0).abs()).fold(0.0, f64::max);
    if pairing_defect > PAIRING_TOL {
        return Err(Error::stage("elliptic", format!("C_j C_j* off by {pairing_defect:.3e}")));
    }

    let first = &p.orbit.letters[0];
    let n_min = minimal_n(space, &p.basis, &c, first, budget).ok_or_else(|| Error::Budget {
        stage: "elliptic: correction".into(),
        needed: correction_change(space, &p.basis, &c, N_CAP, first),
        allowed: budget,
    })?;
    let n = match n {
        None => n_min,
        Some(n) if n >= n_min => n,
        Some(n) => {
            return Err(Error::Budget {
                stage: format!("elliptic: exponent {n} below minimum {n_min}"),
                needed: correction_change(space, &p.basis, &c, n.max(1), first),
                allowed: budget,
            })
        }
    };

    let b = correction(space, &p.basis, &c, n);
    let mut period = TrackedWord::orbit_power(p, 1);
    let correction_change = period.compose_first(&b)?;
    let mut word = period.repeat(n);
    for i in 1..d {
        word.append(&powers[i]);
        word.append(&powers[d - i]);
        word.append(&powers[i]);
        word.push_orbit(p, n, PADDING);
        word.append(&powers[d - i]);
    }
    for l in word.word.letters.iter_mut() {
        *l = space.refine(l);
    }
    let matrix = word.matrix(d);
    let residual = linalg::op_norm(&(&matrix - Mat::identity(d, d)));
    let distance = word.distance();
    Ok(EllipticWord {
        word,
        matrix,
        residual,
        n,
        n_min,
        cycle: tau,
        mu,
        c,
        pairing_defect,
        correction_change,
        distance,
    })
}
