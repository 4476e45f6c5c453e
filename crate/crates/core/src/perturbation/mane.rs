//! Two-dimensional dichotomy: either a dominated splitting or a small
//! rotation of every letter that makes the period map elliptic.

use crate::cocycle::{CocycleSystem, PeriodicOrbit};
use crate::domination::{find_splitting, DominationCertificate, SplittingSearch};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat, C64};
use crate::symplectic::{rotation, SymplecticSpace};

#[derive(Debug, Clone, Copy)]
pub struct ManeOptions {
    /// Number of angles tried on each side of zero.
    pub samples: usize,
    /// Largest dominance index accepted for a certificate. `None` uses
    /// [`mane_ell`].
    pub ell_max: Option<usize>,
}

impl Default for ManeOptions {
    fn default() -> Self {
        ManeOptions { samples: 1000, ell_max: None }
    }
}

#[derive(Debug, Clone)]
pub enum ManeOutcome {
    Dominated {
        certificate: DominationCertificate,
    },
    Complexified {
        letters: Vec<Mat>,
        angle: f64,
        distance: f64,
        eigenvalue: C64,
    },
    /// Neither branch succeeded within the search limits.
    Undecided {
        ell_max: usize,
        best_trace: f64,
    },
}

impl ManeOutcome {
    pub fn is_complexified(&self) -> bool {
        matches!(self, ManeOutcome::Complexified { .. })
    }

    pub fn is_dominated(&self) -> bool {
        matches!(self, ManeOutcome::Dominated { .. })
    }
}

/// Dominance index used for the certificate branch at norm bound `k` and
/// perturbation size `eps`. Calibrated with `examples/calibrate_ell.rs`:
/// on random families with periods up to 4 the systems that no rotation
/// makes elliptic were all dominated with index at most `0.25/ε + 7`, and
/// this bound keeps a margin of about two over that.
pub fn mane_ell(k: f64, eps: f64) -> usize {
    let raw = 0.5 / eps + k.max(1.0).ln() + 2.0;
    (raw.ceil() as usize).clamp(1, 400)
}

fn normalized(m: &Mat) -> Mat {
    m / m.determinant().sqrt()
}

/// `tr² − 4 det`; negative exactly when the eigenvalues are non-real.
fn discriminant(m: &Mat) -> f64 {
    let t = m.trace();
    t * t - 4.0 * m.determinant()
}

fn is_elliptic(m: &Mat) -> bool {
    discriminant(m) < -1e-12 * m.determinant().abs().max(1.0)
}

fn rotated_product(unit: &[Mat], phi: f64) -> Mat {
    let r = rotation(phi);
    linalg::product(2, unit.iter().map(|l| &r * l).collect::<Vec<_>>().iter())
}

fn upper_eigenvalue(m: &Mat) -> C64 {
    linalg::eigenvalues(m).into_iter().max_by(|a, b| a.im.total_cmp(&b.im)).unwrap()
}

/// Runs the dichotomy on a 2-dimensional orbit with orientation-preserving
/// letters. The complexifying branch composes every letter with the same
/// rotation of angle at most `eps`, trying angles in order of increasing
/// size, then rescales each letter to keep its determinant.
pub fn mane_2d(orbit: &PeriodicOrbit, eps: f64, opts: ManeOptions) -> Result<ManeOutcome> {
    if orbit.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: orbit.dim() });
    }
    if eps <= 0.0 || !eps.is_finite() {
        return Err(Error::Invalid(format!("perturbation size must be positive, got {eps}")));
    }
    for (idx, l) in orbit.letters.iter().enumerate() {
        if l.determinant() <= 0.0 {
            return Err(Error::Hypothesis(format!("letter {idx} reverses orientation")));
        }
    }
    let unit: Vec<Mat> = orbit.letters.iter().map(normalized).collect();
    let base = linalg::product(2, &unit);
    if is_elliptic(&base) {
        return Ok(ManeOutcome::Complexified {
            letters: orbit.letters.clone(),
            angle: 0.0,
            distance: 0.0,
            eigenvalue: upper_eigenvalue(&orbit.product()),
        });
    }
    let m = opts.samples.max(1);
    let mut best_trace = base.trace().abs();
    for step in 1..=m {
        for sign in [1.0, -1.0] {
            let phi = sign * eps * step as f64 / m as f64;
            let prod = rotated_product(&unit, phi);
            best_trace = best_trace.min(prod.trace().abs());
            if is_elliptic(&prod) {
                let r = rotation(phi);
                let letters: Vec<Mat> = orbit
                    .letters
                    .iter()
                    .map(|l| {
                        let b = &r * l;
                        let s = (l.determinant() / b.determinant()).sqrt();
                        b * s
                    })
                    .collect();
                let distance =
                    letters.iter().zip(&orbit.letters).map(|(a, b)| linalg::op_norm(&(a - b))).fold(0.0, f64::max);
                let eigenvalue = upper_eigenvalue(&linalg::product(2, &letters));
                return Ok(ManeOutcome::Complexified { letters, angle: phi, distance, eigenvalue });
            }
        }
    }
    let k = orbit
        .letters
        .iter()
        .map(|l| {
            let u = normalized(l);
            linalg::op_norm(&u).max(linalg::op_norm(&u.try_inverse().unwrap()))
        })
        .fold(1.0, f64::max);
    let ell_max = opts.ell_max.unwrap_or_else(|| mane_ell(k, eps));
    let space = SymplecticSpace::standard_form(1)?;
    let system = CocycleSystem::new(space, vec![PeriodicOrbit::new(orbit.id.clone(), unit)?])?;
    match find_splitting(&system, 1, ell_max)? {
        SplittingSearch::Found { certificate, .. } => Ok(ManeOutcome::Dominated { certificate }),
        SplittingSearch::NotFound { .. } => Ok(ManeOutcome::Undecided { ell_max, best_trace }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn orbit(letters: Vec<Mat>) -> PeriodicOrbit {
        PeriodicOrbit::new("p", letters).unwrap()
    }

    fn diag(a: f64, b: f64) -> Mat {
        Mat::from_row_slice(2, 2, &[a, 0.0, 0.0, b])
    }

    #[test]
    fn elliptic_input_is_untouched() {
        let out = mane_2d(&orbit(vec![rotation(0.2)]), 0.1, ManeOptions::default()).unwrap();
        match out {
            ManeOutcome::Complexified { angle, distance, .. } => {
                assert_eq!(angle, 0.0);
                assert_eq!(distance, 0.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn weak_hyperbolic_becomes_elliptic() {
        let a = diag(1.05, 1.0 / 1.05);
        // Oracle: trace of rotation(0.1)·diag(1.05, 1/1.05).
        let t = 0.1_f64.cos() * (1.05 + 1.0 / 1.05);
        assert!(t.abs() < 2.0);
        let out = mane_2d(&orbit(vec![a]), 0.2, ManeOptions::default()).unwrap();
        match out {
            ManeOutcome::Complexified { letters, angle, distance, eigenvalue } => {
                assert!(angle.abs() <= 0.1 + 1e-12);
                assert!(distance <= 0.2 * 1.05 + 1e-12);
                assert!(eigenvalue.im > 0.0);
                assert!((letters[0].determinant() - 1.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn strong_hyperbolic_is_dominated() {
        let out = mane_2d(&orbit(vec![diag(10.0, 0.1)]), 0.01, ManeOptions::default()).unwrap();
        match out {
            ManeOutcome::Dominated { certificate } => {
                assert_eq!(certificate.ell, 1);
                assert!((certificate.worst_ratio - 0.01).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(mane_2d(&orbit(vec![Mat::identity(4, 4)]), 0.1, ManeOptions::default()).is_err());
        assert!(mane_2d(&orbit(vec![rotation(0.1)]), 0.0, ManeOptions::default()).is_err());
        assert!(mane_2d(&orbit(vec![diag(-1.0, 1.0)]), 0.1, ManeOptions::default()).is_err());
    }
}
