//! Instance generators and reference computations shared by the
//! integration tests. The references use plain nalgebra decompositions and
//! never call into the library's own numerics.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::io::Write;
use symcocycle::cocycle::{CocycleSystem, PeriodicOrbit, TransitionWord};
use symcocycle::symplectic::SymplecticSpace;

pub type Mat = DMatrix<f64>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn space(n: usize) -> SymplecticSpace {
    SymplecticSpace::standard_form(n).unwrap()
}

/// Anti-diagonal standard form, built independently of the library.
pub fn standard_j(d: usize) -> Mat {
    Mat::from_fn(d, d, |r, c| {
        if r + c + 1 != d {
            0.0
        } else if r < d / 2 {
            1.0
        } else {
            -1.0
        }
    })
}

/// `‖MᵀJM − J‖∞` (largest absolute row sum).
pub fn symplectic_defect(m: &Mat) -> f64 {
    let j = standard_j(m.nrows());
    let r = m.transpose() * &j * m - &j;
    r.row_iter().map(|row| row.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

pub fn spectrum(m: &Mat) -> Vec<Complex64> {
    // Shifted and rescaled so clustered spectra near `c` are resolved.
    let d = m.nrows();
    let c = m.trace() / d as f64;
    let shifted = m - Mat::identity(d, d) * c;
    let s = shifted.amax();
    if s == 0.0 {
        return vec![Complex64::new(c, 0.0); d];
    }
    let schur =
        (shifted / s).try_schur(f64::EPSILON, 10_000).unwrap_or_else(|| panic!("Schur did not converge on {m}"));
    schur.complex_eigenvalues().iter().map(|z| z * s + c).collect()
}

/// Largest over the spectrum of `min_μ |μ − 1/λ| / |1/λ|`.
pub fn pairing_defect(m: &Mat) -> f64 {
    let ev = spectrum(m);
    ev.iter()
        .map(|l| {
            let inv = 1.0 / l;
            ev.iter().map(|mu| (mu - inv).norm()).fold(f64::INFINITY, f64::min) / inv.norm()
        })
        .fold(0.0, f64::max)
}

/// Spectral norm through the SVD.
pub fn norm2(m: &Mat) -> f64 {
    if m.ncols() == 0 || m.nrows() == 0 {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

/// Orthonormal basis of the column span through a thin QR.
pub fn orthonormalize(m: &Mat) -> Mat {
    m.clone().qr().q()
}

pub fn diag_sp(d: &[f64]) -> Mat {
    let n = d.len();
    let mut out = Mat::zeros(2 * n, 2 * n);
    for (i, &x) in d.iter().enumerate() {
        out[(i, i)] = x;
        out[(2 * n - 1 - i, 2 * n - 1 - i)] = 1.0 / x;
    }
    out
}

/// Random symplectic matrix with operator norm at most `cap`.
pub fn bounded_symplectic(s: &SymplecticSpace, r: &mut ChaCha8Rng, scale: f64, cap: f64) -> Mat {
    loop {
        let m = s.random_symplectic(r, scale);
        if norm2(&m) <= cap {
            return m;
        }
    }
}

/// Period-`period` orbit with letters `Q_{k+1} D_k Q_k⁻¹`, `Q_period = Q_0`,
/// so every period map is conjugate to a diagonal matrix. Letters have
/// norm at most `cap`.
pub fn conjugated_orbit(
    s: &SymplecticSpace,
    r: &mut ChaCha8Rng,
    id: &str,
    diags: &[Vec<f64>],
    frame_scale: f64,
    cap: f64,
) -> (PeriodicOrbit, Vec<Mat>) {
    loop {
        let qs: Vec<Mat> = (0..diags.len()).map(|_| s.random_symplectic(r, frame_scale)).collect();
        let p = diags.len();
        let letters: Vec<Mat> =
            (0..p).map(|k| &qs[(k + 1) % p] * diag_sp(&diags[k]) * s.symplectic_inverse(&qs[k])).collect();
        if letters.iter().all(|l| norm2(l) <= cap) {
            return (PeriodicOrbit::new(id, letters).unwrap(), qs);
        }
    }
}

/// Period-`period` orbit repeating one letter whose period map is conjugate
/// to `diag(lams, 1/lams)`, with a near-identity self-transition.
pub fn designated(n: usize, lams: &[f64], period: usize, seed: u64) -> CocycleSystem {
    let s = space(n);
    let q = s.random_symplectic(&mut rng(seed), 0.2);
    let root: Vec<f64> = lams.iter().map(|l| l.powf(1.0 / period as f64)).collect();
    let a = &q * s.diagonal(&root) * s.symplectic_inverse(&q);
    let p = PeriodicOrbit::new("p", vec![a; period]).unwrap();
    let t = TransitionWord::new("p", "p", vec![s.random_symplectic(&mut rng(seed + 1), 0.01)]);
    CocycleSystem::new(s, vec![p]).unwrap().with_transitions(vec![t]).unwrap()
}

pub fn uniform(r: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    r.random_range(lo..hi)
}

pub fn vector(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

/// Writes straight to the process stderr so the line survives output
/// capture.
pub fn report(criterion: usize, pass: bool, summary: &str, seconds: f64) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let line = format!("criterion {criterion}: {verdict} ({summary}; {seconds:.2} s)\n");
    let mut err = std::io::stderr().lock();
    let _ = err.write_all(line.as_bytes());
}
