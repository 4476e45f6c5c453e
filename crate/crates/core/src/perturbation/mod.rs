//! Symplectic perturbation constructors.
//!
//! Internal line indices are 0-based. Spectral positions (`i` in
//! [`has_rank_complex`], `(i, j, k)` in [`collapse_and_complexify`]) are
//! 1-based ranks in the ordering of eigenvalues by increasing modulus.

mod collapse;
mod diagonalize;
mod mane;
mod realize;

pub use collapse::{
    collapse_and_complexify, CaseLabel, CollapseOptions, CollapseOutcome, CollapseReport, EventKind, IsotopySample,
    IsotopyTrace,
};
pub use diagonalize::{diagonalize, Diagonalized};
pub use mane::{mane_2d, mane_ell, ManeOptions, ManeOutcome};
pub use realize::{
    realize_at, realize_in_coords, realize_on_frame, realize_on_pair, straighten, BlockCoefficients, BlockPerturbation,
    OrbitFrames, Realized, Straightening,
};

use crate::cocycle::PeriodicOrbit;
use crate::domination::sorted_spectrum;
use crate::linalg::{self, Mat, C64};

const RANK_GAP_RTOL: f64 = 1e-9;

/// True when the eigenvalues at positions `i` and `i + 1` (1-based, sorted by
/// modulus) form a non-real conjugate pair whose modulus is strictly above
/// every earlier one and strictly below every later one.
pub fn has_rank_complex(m: &Mat, i: usize) -> bool {
    let ev = sorted_spectrum(m);
    rank_complex_in(&ev, i)
}

pub(crate) fn rank_complex_in(ev: &[C64], i: usize) -> bool {
    let d = ev.len();
    if i == 0 || i >= d {
        return false;
    }
    let (a, b) = (ev[i - 1], ev[i]);
    let r = a.norm().max(b.norm());
    let tol = RANK_GAP_RTOL * r.max(1.0);
    if a.im.abs() <= tol || (a - b.conj()).norm() > 1e-7 * r.max(1.0) {
        return false;
    }
    let below = i < 2 || ev[i - 2].norm() < a.norm() - tol;
    let above = i + 1 >= d || ev[i + 1].norm() > b.norm() + tol;
    below && above
}

/// Largest letter-wise operator distance between two orbits of equal period.
pub fn orbit_distance(a: &PeriodicOrbit, b: &PeriodicOrbit) -> f64 {
    a.letters.iter().zip(&b.letters).map(|(x, y)| linalg::op_norm(&(x - y))).fold(0.0, f64::max)
}
