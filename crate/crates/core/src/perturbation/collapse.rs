//! Eigenvalue collapse through a two-dimensional quotient, followed by an
//! isotopy search for a complex pair of a prescribed rank.

use super::mane::{mane_2d, ManeOptions, ManeOutcome};
use super::realize::{realize_at, realize_in_coords, realize_on_frame, BlockPerturbation, OrbitFrames};
use super::{orbit_distance, rank_complex_in};
use crate::cocycle::PeriodicOrbit;
use crate::domination::{sorted_spectrum, DominationCertificate};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat, Vector, C64};
use crate::par;
use crate::symplectic::{rotation, SubspaceKind, SymplecticSpace};
use serde::{Deserialize, Serialize};

/// Relative imaginary part required of a pair produced by a final rotation.
const MIN_IMAG: f64 = 1e-6;

#[derive(Debug, Clone, Copy)]
pub struct CollapseOptions {
    /// Isotopy samples on `[0, 1]`.
    pub samples: usize,
    /// Iterations of the ternary / bisection refinement.
    pub refine: usize,
    /// Minimal eigenvalue separation required of the input period map.
    pub gap: f64,
    pub mane: ManeOptions,
}

impl Default for CollapseOptions {
    fn default() -> Self {
        CollapseOptions { samples: 1000, refine: 60, gap: 1e-9, mane: ManeOptions::default() }
    }
}

#[derive(Debug, Clone)]
pub struct IsotopySample {
    pub t: f64,
    pub letters: Vec<Mat>,
    /// Spectrum of the period map, sorted by modulus.
    pub spectrum: Vec<C64>,
    /// Continuations of the eigenvalues at `j`, `k + 1`, `j*`, `(k + 1)*`.
    pub tracked: [C64; 4],
}

#[derive(Debug, Clone, Default)]
pub struct IsotopyTrace {
    pub samples: Vec<IsotopySample>,
}

impl IsotopyTrace {
    /// Largest change of a tracked eigenvalue between consecutive samples.
    pub fn max_jump(&self) -> f64 {
        self.samples
            .windows(2)
            .flat_map(|w| (0..4).map(move |r| (w[1].tracked[r] - w[0].tracked[r]).norm()))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    /// The isotopy itself reaches a complex pair of the requested rank.
    Complex,
    /// Two real eigenvalues at the requested ranks meet; a rotation in their
    /// plane finishes the job.
    Crossing,
}

/// Which of the three spectral configurations (1: ranks straddle 1,
/// 2: both below 1, 3: both above) and where the collapsed modulus lands
/// (a: below both, b: above both, c: between).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseLabel {
    pub case: u8,
    pub sub: char,
}

#[derive(Debug, Clone)]
pub struct CollapseReport {
    pub orbit: PeriodicOrbit,
    pub event: EventKind,
    pub event_time: f64,
    pub case: CaseLabel,
    /// Rotation angle used on the quotient.
    pub quotient_angle: f64,
    /// Extra rotation applied at the event (zero for [`EventKind::Complex`]).
    pub rotation_angle: f64,
    pub collapsed_modulus: f64,
    pub distance: f64,
    /// Complex eigenvalue of rank `(i, i + 1)` with positive imaginary part.
    pub eigenvalue: C64,
    pub trace: IsotopyTrace,
}

#[derive(Debug, Clone)]
pub enum CollapseOutcome {
    AlreadyComplex,
    Complexified(Box<CollapseReport>),
    /// The quotient splitting is dominated; no perturbation within budget.
    Obstructed {
        certificate: DominationCertificate,
    },
    NoEvent {
        reason: String,
        trace: IsotopyTrace,
    },
}

struct Setup<'a> {
    space: &'a SymplecticSpace,
    orbit: &'a PeriodicOrbit,
    frames: OrbitFrames,
    /// `G_{t+1}` for each letter `t`.
    g_next: Vec<Mat>,
    a: usize,
    b: usize,
    phi: f64,
}

impl Setup<'_> {
    fn letters_at(&self, s: f64) -> Result<Vec<Mat>> {
        let r = rotation(s * self.phi);
        let p = self.orbit.period();
        (0..p)
            .map(|t| {
                let g = &self.g_next[t];
                let blk = g.clone().try_inverse().expect("quotient frame is invertible") * &r * g;
                let pert = BlockPerturbation::new(self.a, self.b, blk)?;
                let pt = realize_at(self.space, self.frames.at(t + 1), &pert)?;
                Ok(pt * &self.orbit.letters[t])
            })
            .collect()
    }
}

fn sample(setup: &Setup, t: f64) -> Result<(Vec<Mat>, Vec<C64>)> {
    let letters = setup.letters_at(t)?;
    let d = setup.space.dim();
    let prod = linalg::product(d, &letters);
    if prod.iter().any(|x| !x.is_finite()) {
        return Err(Error::stage("collapse", format!("non-finite period map at t = {t}")));
    }
    Ok((letters, sorted_spectrum(&prod)))
}

fn gap_at(ev: &[C64], i: usize) -> f64 {
    ev[i].norm() - ev[i - 1].norm()
}

fn real_pair(ev: &[C64], i: usize) -> bool {
    let (x, y) = (ev[i - 1], ev[i]);
    let tol = 1e-9 * x.norm().max(y.norm()).max(1.0);
    x.im.abs() <= tol && y.im.abs() <= tol && x.re * y.re > 0.0
}

/// Greedy nearest-value matching of a new spectrum to existing branches.
fn track(prev: &[C64], next: &[C64]) -> Vec<C64> {
    let n = prev.len();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
    for (r, p) in prev.iter().enumerate() {
        for (c, q) in next.iter().enumerate() {
            pairs.push(((p - q).norm(), r, c));
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut out = vec![C64::new(f64::NAN, 0.0); n];
    let (mut used_r, mut used_c) = (vec![false; n], vec![false; n]);
    for (_, r, c) in pairs {
        if !used_r[r] && !used_c[c] {
            out[r] = next[c];
            used_r[r] = true;
            used_c[c] = true;
        }
    }
    out
}

fn classify(values: &[f64], i: usize, n: usize, collapsed: f64) -> CaseLabel {
    let m: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    let (lo, hi) = (m[i - 1], m[i]);
    let case = if lo <= 1.0 && 1.0 <= hi {
        1
    } else if hi < 1.0 {
        2
    } else {
        3
    };
    let (lo, hi) = if case == 1 { (m[n - 1], m[n]) } else { (lo, hi) };
    let sub = if collapsed < lo {
        'a'
    } else if collapsed > hi {
        'b'
    } else {
        'c'
    };
    CaseLabel { case, sub }
}

struct Completion {
    orbit: PeriodicOrbit,
    angle: f64,
    distance: f64,
    eigenvalue: C64,
}

/// Rotates inside the invariant plane of the eigenvalues at ranks
/// `(i, i + 1)` of the period map of `letters`, on the last letter.
fn complete(space: &SymplecticSpace, base: &PeriodicOrbit, letters: &[Mat], i: usize, eps: f64) -> Option<Completion> {
    let d = space.dim();
    let m = linalg::product(d, letters);
    let ev = sorted_spectrum(&m);
    let (mu1, mu2) = (ev[i - 1], ev[i]);
    let v = linalg::pair_kernel(&m, mu1, mu2);
    let kind = space.classify_subspace(&v).ok()?;
    let (frame, local) = match kind {
        SubspaceKind::Symplectic => {
            let u = v.column(0).normalize();
            let w0 = v.column(1).into_owned();
            let w = &w0 - &u * u.dot(&w0);
            let c = space.omega(&u, &w);
            if c.abs() < 1e-12 {
                return None;
            }
            (linalg::span(&[u, w / c]), SymplecticSpace::standard_form(1).ok()?)
        }
        k if k.is_isotropic() => {
            let q = linalg::orthonormal_basis(&v, 1e-12);
            if q.ncols() != 2 {
                return None;
            }
            let vs = linalg::pair_kernel(&m, mu1.inv(), mu2.inv());
            let t = q.transpose() * &space.j * &vs;
            let z = &vs * t.try_inverse()?;
            let cols: Vec<Vector> = vec![
                q.column(0).into_owned(),
                q.column(1).into_owned(),
                z.column(1).into_owned(),
                z.column(0).into_owned(),
            ];
            (linalg::span(&cols), SymplecticSpace::standard_form(2).ok()?)
        }
        _ => return None,
    };
    let g = (mu2.norm() - mu1.norm()).abs();
    let phi0 = (g / (mu1.norm() + mu2.norm())).min(1.0).asin().max(1e-8);
    let last = letters.len() - 1;
    for factor in [1.0001, 1.001, 1.01, 1.1, 1.5, 2.0, 3.0, 5.0, 10.0, 30.0, 100.0, 1e3, 1e4] {
        for sign in [1.0, -1.0] {
            let phi = sign * phi0 * factor;
            if phi.abs() > std::f64::consts::FRAC_PI_2 {
                continue;
            }
            let pert = BlockPerturbation::new(0, 1, rotation(phi)).ok()?;
            let c = realize_in_coords(&local, &local.identity(), &pert).ok()?;
            let p = realize_on_frame(space, &frame, &c).ok()?;
            let mut out = base.clone();
            out.letters = letters.to_vec();
            out.letters[last] = &p * &letters[last];
            let distance = orbit_distance(&out, base);
            if distance > eps {
                break;
            }
            let ev = sorted_spectrum(&out.product());
            let robust = ev[i - 1].im.abs() >= MIN_IMAG * ev[i - 1].norm();
            if robust && rank_complex_in(&ev, i) {
                let eigenvalue = if ev[i - 1].im > 0.0 { ev[i - 1] } else { ev[i] };
                return Some(Completion { orbit: out, angle: phi, distance, eigenvalue });
            }
        }
    }
    None
}

/// Collapses the eigenvalues at ranks `j` and `k + 1` of a diagonalizable
/// orbit through the quotient by the eigenlines strictly between them, then
/// follows the linear isotopy from the original letters to the collapsed
/// ones until a complex pair of rank `(i, i + 1)` can be produced.
/// All ranks are 1-based with `j ≤ i < i + 1 ≤ k + 1 ≤ 2N`.
pub fn collapse_and_complexify(
    space: &SymplecticSpace,
    orbit: &PeriodicOrbit,
    i: usize,
    j: usize,
    k: usize,
    eps: f64,
    opts: CollapseOptions,
) -> Result<CollapseOutcome> {
    let d = space.dim();
    if orbit.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: orbit.dim() });
    }
    if !(1 <= j && j <= i && i < d && i < k + 1 && k < d) {
        return Err(Error::Invalid(format!("ranks need 1 ≤ j ≤ i < i+1 ≤ k+1 ≤ {d}, got i={i} j={j} k={k}")));
    }
    let m = orbit.product();
    let ev0 = sorted_spectrum(&m);
    if rank_complex_in(&ev0, i) {
        return Ok(CollapseOutcome::AlreadyComplex);
    }
    let eb = space.eigen_symplectic_basis(&m, opts.gap)?;
    let frames = OrbitFrames::new(orbit, &eb);
    let (a, b) = (j - 1, k);
    let p = orbit.period();

    let w: Vec<Mat> = (0..p)
        .map(|t| {
            let f = frames.at(t);
            let ea = f.column(a).into_owned();
            let eb_ = f.column(b).into_owned();
            let (pa, pb) = if b > a + 1 {
                let mid: Vec<usize> = ((a + 1)..b).collect();
                let q = linalg::orthonormal_basis(&linalg::columns(f, &mid), 1e-12);
                (&ea - &q * (q.transpose() * &ea), &eb_ - &q * (q.transpose() * &eb_))
            } else {
                (ea, eb_)
            };
            let w1 = pa.normalize();
            let w2 = (&pb - &w1 * w1.dot(&pb)).normalize();
            linalg::span(&[w1, w2])
        })
        .collect();
    let g: Vec<Mat> = (0..p).map(|t| w[t].transpose() * linalg::columns(frames.at(t), &[a, b])).collect();
    let q_letters: Vec<Mat> = (0..p).map(|t| w[(t + 1) % p].transpose() * &orbit.letters[t] * &w[t]).collect();
    let quotient = PeriodicOrbit::new(format!("{}/quotient", orbit.id), q_letters)?;
    let phi = match mane_2d(&quotient, eps, opts.mane)? {
        ManeOutcome::Dominated { certificate } => return Ok(CollapseOutcome::Obstructed { certificate }),
        ManeOutcome::Undecided { ell_max, best_trace } => {
            return Err(Error::stage(
                "collapse",
                format!("quotient dichotomy undecided (ℓ ≤ {ell_max}, best |trace| {best_trace:.6})"),
            ))
        }
        ManeOutcome::Complexified { angle, .. } => angle,
    };
    let g_next: Vec<Mat> = (0..p).map(|t| g[(t + 1) % p].clone()).collect();
    let setup = Setup { space, orbit, frames, g_next, a, b, phi };

    let collapsed = (eb.values[a] * eb.values[b]).abs().sqrt();
    let case = classify(&eb.values, i, space.n, collapsed);

    let s_count = opts.samples.max(2);
    let raw = par::map_range(s_count + 1, |m| sample(&setup, m as f64 / s_count as f64));
    let raw: Vec<(Vec<Mat>, Vec<C64>)> = raw.into_iter().collect::<Result<_>>()?;
    let mut branches: Vec<C64> = eb.values.iter().map(|&x| C64::new(x, 0.0)).collect();
    let (sa, sb) = (space.star(a), space.star(b));
    let mut trace = IsotopyTrace::default();
    for (m, (letters, spectrum)) in raw.iter().enumerate() {
        branches = track(&branches, spectrum);
        trace.samples.push(IsotopySample {
            t: m as f64 / s_count as f64,
            letters: letters.clone(),
            spectrum: spectrum.clone(),
            tracked: [branches[a], branches[b], branches[sa], branches[sb]],
        });
    }

    let spec = |s: f64| -> Result<(Vec<Mat>, Vec<C64>)> { sample(&setup, s) };
    let mut budget_miss: Option<f64> = None;
    for m in 1..=s_count {
        let ev = &raw[m].1;
        let t_m = m as f64 / s_count as f64;
        if rank_complex_in(ev, i) {
            let (mut lo, mut hi) = ((m - 1) as f64 / s_count as f64, t_m);
            for _ in 0..opts.refine {
                let mid = 0.5 * (lo + hi);
                if rank_complex_in(&spec(mid)?.1, i) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            // The refined time is the boundary; the output sits at the first
            // sample past it, where the pair is robustly non-real.
            let (letters, ev) = (raw[m].0.clone(), raw[m].1.clone());
            let mut out = orbit.clone();
            out.letters = letters;
            let distance = orbit_distance(&out, orbit);
            if distance > eps {
                budget_miss = Some(budget_miss.map_or(distance, |x: f64| x.min(distance)));
                continue;
            }
            let eigenvalue = if ev[i - 1].im > 0.0 { ev[i - 1] } else { ev[i] };
            return Ok(CollapseOutcome::Complexified(Box::new(CollapseReport {
                orbit: out,
                event: EventKind::Complex,
                event_time: hi,
                case,
                quotient_angle: phi,
                rotation_angle: 0.0,
                collapsed_modulus: collapsed,
                distance,
                eigenvalue,
                trace,
            })));
        }
        if m < s_count {
            let (gp, gm, gn) = (gap_at(&raw[m - 1].1, i), gap_at(ev, i), gap_at(&raw[m + 1].1, i));
            if gm <= gp && gm <= gn && real_pair(ev, i) {
                let (mut lo, mut hi) = ((m - 1) as f64 / s_count as f64, (m + 1) as f64 / s_count as f64);
                for _ in 0..opts.refine {
                    let x1 = lo + (hi - lo) / 3.0;
                    let x2 = hi - (hi - lo) / 3.0;
                    if gap_at(&spec(x1)?.1, i) <= gap_at(&spec(x2)?.1, i) {
                        hi = x2;
                    } else {
                        lo = x1;
                    }
                }
                let t_star = 0.5 * (lo + hi);
                let (letters, ev_star) = spec(t_star)?;
                if !real_pair(&ev_star, i) {
                    continue;
                }
                match complete(space, orbit, &letters, i, eps) {
                    Some(c) => {
                        return Ok(CollapseOutcome::Complexified(Box::new(CollapseReport {
                            orbit: c.orbit,
                            event: EventKind::Crossing,
                            event_time: t_star,
                            case,
                            quotient_angle: phi,
                            rotation_angle: c.angle,
                            collapsed_modulus: collapsed,
                            distance: c.distance,
                            eigenvalue: c.eigenvalue,
                            trace,
                        })))
                    }
                    None => {
                        let mut o = orbit.clone();
                        o.letters = letters;
                        let dist = orbit_distance(&o, orbit);
                        if dist > eps {
                            budget_miss = Some(budget_miss.map_or(dist, |x: f64| x.min(dist)));
                        }
                    }
                }
            }
        }
    }
    if let Some(needed) = budget_miss {
        return Err(Error::Budget { stage: "collapse_and_complexify".into(), needed, allowed: eps });
    }
    Ok(CollapseOutcome::NoEvent { reason: format!("no event among {s_count} isotopy samples"), trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perturbation::has_rank_complex;

    fn run(space: &SymplecticSpace, orbit: &PeriodicOrbit, i: usize, j: usize, k: usize, eps: f64) -> CollapseOutcome {
        collapse_and_complexify(space, orbit, i, j, k, eps, CollapseOptions::default()).unwrap()
    }

    #[test]
    fn already_complex_is_immediate() {
        let s = SymplecticSpace::standard_form(1).unwrap();
        let o = PeriodicOrbit::new("p", vec![rotation(0.5)]).unwrap();
        assert!(matches!(run(&s, &o, 1, 1, 1, 0.1), CollapseOutcome::AlreadyComplex));
    }

    #[test]
    fn two_dimensional_collapse_on_circle() {
        let s = SymplecticSpace::standard_form(1).unwrap();
        let o = PeriodicOrbit::new("p", vec![s.diagonal(&[1.02])]).unwrap();
        match run(&s, &o, 1, 1, 1, 0.1) {
            CollapseOutcome::Complexified(r) => {
                // Oracle: a real 2×2 map with det 1 is elliptic iff |trace| < 2.
                let prod = r.orbit.product();
                assert!(prod.trace().abs() < 2.0);
                assert!((prod.determinant() - 1.0).abs() < 1e-12);
                assert!((r.eigenvalue.norm() - 1.0).abs() < 1e-9);
                assert_eq!(r.case, CaseLabel { case: 1, sub: 'c' });
                assert!(r.distance <= 0.1);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn four_dimensional_middle_pair() {
        let s = SymplecticSpace::standard_form(2).unwrap();
        let o = PeriodicOrbit::new("p", vec![s.diagonal(&[3.0, 1.03])]).unwrap();
        match run(&s, &o, 2, 2, 2, 0.1) {
            CollapseOutcome::Complexified(r) => {
                let prod = r.orbit.product();
                assert!(has_rank_complex(&prod, 2));
                assert!(s.symplectic_residual(&r.orbit.letters[0]).unwrap() < 1e-8);
                assert_eq!(r.case.case, 1);
                // Remaining spectrum keeps its moduli 1/3 and 3.
                let ev = sorted_spectrum(&prod);
                assert!((ev[0].norm() - 1.0 / 3.0).abs() < 1e-6);
                assert!((ev[3].norm() - 3.0).abs() < 1e-6);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn collapse_across_a_middle_line() {
        let s = SymplecticSpace::standard_form(2).unwrap();
        let o = PeriodicOrbit::new("p", vec![s.diagonal(&[1.5, 1.2])]).unwrap();
        match run(&s, &o, 2, 1, 2, 0.5) {
            CollapseOutcome::Complexified(r) => {
                assert_eq!(r.case, CaseLabel { case: 1, sub: 'c' });
                assert!(r.eigenvalue.im >= 1e-6);
                assert!(has_rank_complex(&r.orbit.product(), 2));
                assert!(s.symplectic_residual(&r.orbit.letters[0]).unwrap() < 1e-8);
                assert!(r.distance <= 0.5);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn strongly_separated_pair_is_obstructed() {
        let s = SymplecticSpace::standard_form(1).unwrap();
        let o = PeriodicOrbit::new("p", vec![s.diagonal(&[10.0])]).unwrap();
        assert!(matches!(run(&s, &o, 1, 1, 1, 0.01), CollapseOutcome::Obstructed { .. }));
    }

    #[test]
    fn rank_arguments_are_checked() {
        let s = SymplecticSpace::standard_form(2).unwrap();
        let o = PeriodicOrbit::new("p", vec![s.diagonal(&[3.0, 2.0])]).unwrap();
        let opts = CollapseOptions::default();
        assert!(collapse_and_complexify(&s, &o, 2, 3, 3, 0.1, opts).is_err());
        assert!(collapse_and_complexify(&s, &o, 2, 1, 1, 0.1, opts).is_err());
        assert!(collapse_and_complexify(&s, &o, 4, 1, 4, 0.1, opts).is_err());
    }
}
