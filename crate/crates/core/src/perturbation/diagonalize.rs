//! Small symplectic corrections giving a period map with simple real
//! positive spectrum.

use crate::cocycle::PeriodicOrbit;
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::symplectic::SymplecticSpace;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STEPS: usize = 60;
const RANDOM_PER_STEP: usize = 8;

#[derive(Debug, Clone)]
pub struct Diagonalized {
    pub orbit: PeriodicOrbit,
    /// Correction composed after the last letter.
    pub correction: Mat,
    pub distance: f64,
    /// Eigenvalues of the new period map, increasing.
    pub spectrum: Vec<f64>,
    pub gap: f64,
}

/// Smallest modulus gap of a simple real positive spectrum, or `None`.
fn positive_gap(m: &Mat) -> Option<(Vec<f64>, f64)> {
    let ev = linalg::eigenvalues(m);
    let scale = ev.iter().map(|z| z.norm()).fold(1.0, f64::max);
    if ev.iter().any(|z| z.im.abs() > 1e-10 * scale || z.re <= 0.0) {
        return None;
    }
    let mut v: Vec<f64> = ev.iter().map(|z| z.re).collect();
    v.sort_by(|a, b| a.total_cmp(b));
    let gap = v.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    Some((v, gap))
}

fn candidates(space: &SymplecticSpace, delta: f64, rng: &mut ChaCha8Rng) -> Vec<Mat> {
    let n = space.n;
    let d = space.dim();
    let mut out = Vec::new();
    for pattern in 0..(1usize << n) {
        let dil: Vec<f64> = (0..n)
            .map(|i| {
                let s = if pattern >> i & 1 == 0 { 1.0 } else { -1.0 };
                1.0 + s * delta * (n - i) as f64 / n as f64
            })
            .collect();
        out.push(space.diagonal(&dil));
    }
    let shears: Vec<Mat> = (0..d)
        .flat_map(|a| {
            let e = space.basis_vector(a);
            [space.shear(&e, delta), space.shear(&e, -delta)]
        })
        .collect();
    let first_dilation = out[0].clone();
    for s in &shears {
        out.push(s.clone());
        out.push(&first_dilation * s);
    }
    for _ in 0..RANDOM_PER_STEP {
        let h = Mat::from_fn(d, d, |_, _| rng.random_range(-1.0..=1.0));
        let x = &space.j * (&h + h.transpose());
        let nx = linalg::op_norm(&x);
        if nx > 0.0 {
            out.push(linalg::cayley(&(x * (delta / nx))));
        }
    }
    out
}

/// Composes the last letter of `orbit` with a symplectic map `Q` such that
/// the period map has `2N` distinct real positive eigenvalues separated by
/// at least `gap`, keeping `‖Q A_{p-1} − A_{p-1}‖ ≤ eps`. Candidates are
/// paired dilations, shears, their products and seeded random Cayley
/// elements, tried at sizes `eps·m/60`.
pub fn diagonalize(space: &SymplecticSpace, orbit: &PeriodicOrbit, eps: f64, gap: f64) -> Result<Diagonalized> {
    if orbit.dim() != space.dim() {
        return Err(Error::DimensionMismatch { expected: space.dim(), found: orbit.dim() });
    }
    if eps <= 0.0 {
        return Err(Error::Invalid(format!("perturbation size must be positive, got {eps}")));
    }
    let m = orbit.product();
    if let Some((spectrum, g)) = positive_gap(&m) {
        if g >= gap {
            return Ok(Diagonalized {
                orbit: orbit.clone(),
                correction: space.identity(),
                distance: 0.0,
                spectrum,
                gap: g,
            });
        }
    }
    let last = orbit.period() - 1;
    let a_last = &orbit.letters[last];
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut best = f64::NEG_INFINITY;
    for step in 1..=STEPS {
        let delta = eps * step as f64 / STEPS as f64;
        for q in candidates(space, delta, &mut rng) {
            let letter = &q * a_last;
            let distance = linalg::op_norm(&(&letter - a_last));
            if distance > eps {
                continue;
            }
            let prod = &q * &m;
            match positive_gap(&prod) {
                Some((spectrum, g)) if g >= gap => {
                    let mut out = orbit.clone();
                    out.letters[last] = letter;
                    return Ok(Diagonalized { orbit: out, correction: q, distance, spectrum, gap: g });
                }
                Some((_, g)) => best = best.max(g),
                None => {}
            }
        }
    }
    Err(Error::GapViolation { found: best.max(0.0), required: gap })
}
