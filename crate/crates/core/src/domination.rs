//! Certification of ℓ-dominated splittings on periodic cocycles, quotient
//! cocycles and the combination of dominations across a quotient.
//!
//! For invariant bundles the ratio `r_x(n) = ‖Aⁿ|E(x)‖·‖A⁻ⁿ|F(fⁿx)‖` is
//! submultiplicative, `r_x(n + m) ≤ r_x(n)·r_{fⁿx}(m)`, so checking every
//! point for `n ∈ [ℓ, 2ℓ - 1]` covers all `n ≥ ℓ`. The checked horizon is
//! `max(ℓ + period·2N, 2ℓ - 1)`.

use crate::cocycle::{CocycleSystem, PeriodicOrbit};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat, C64};
use crate::par;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const INVARIANCE_TOL: f64 = 1e-6;

/// Orthonormal bases indexed by orbit, then by point.
pub type Bundle = Vec<Vec<Mat>>;

#[derive(Debug, Clone)]
pub struct Splitting {
    pub ids: Vec<String>,
    pub e: Bundle,
    pub f: Bundle,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointSplitting {
    #[serde(rename = "E")]
    pub e: Vec<Vec<f64>>,
    #[serde(rename = "F")]
    pub f: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DominationCertificate {
    pub ell: usize,
    pub worst_ratio: f64,
    pub horizon: usize,
    #[serde(rename = "C")]
    pub c: f64,
    pub lambda: f64,
    pub spectral_tail: bool,
    pub min_angle: f64,
    pub splitting: BTreeMap<String, PointSplitting>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub orbit: String,
    pub point: usize,
    pub n: usize,
    pub ratio: f64,
}

#[derive(Debug, Clone)]
pub enum DominationOutcome {
    Certified(DominationCertificate),
    Counterexample(Counterexample),
}

impl DominationOutcome {
    pub fn is_certified(&self) -> bool {
        matches!(self, DominationOutcome::Certified(_))
    }

    pub fn certificate(&self) -> Option<&DominationCertificate> {
        match self {
            DominationOutcome::Certified(c) => Some(c),
            DominationOutcome::Counterexample(_) => None,
        }
    }
}

pub fn horizon(ell: usize, period: usize, dim: usize) -> usize {
    (ell + period * dim).max(2 * ell - 1)
}

fn bundle_basis(m: &Mat) -> Mat {
    linalg::orthonormal_basis(m, 1e-10)
}

/// The cocycle restricted to invariant bundles `E` and `F` in orthonormal
/// bases: `E_{k+1}ᵀ A_k E_k` forward and `F_kᵀ A_k⁻¹ F_{k+1}` backward.
fn restricted_letters(orbit: &PeriodicOrbit, e: &[Mat], f: &[Mat]) -> (Vec<Mat>, Vec<Mat>) {
    let p = orbit.period();
    let e: Vec<Mat> = e.iter().map(bundle_basis).collect();
    let f: Vec<Mat> = f.iter().map(bundle_basis).collect();
    let fwd = (0..p).map(|k| e[(k + 1) % p].transpose() * &orbit.letters[k] * &e[k]).collect();
    let bwd = (0..p)
        .map(|k| {
            let inv = orbit.letters[k].clone().try_inverse().expect("invertible letter");
            f[k].transpose() * inv * &f[(k + 1) % p]
        })
        .collect();
    (fwd, bwd)
}

fn norm_or_zero(m: &Mat) -> f64 {
    if m.is_empty() {
        0.0
    } else {
        linalg::op_norm(m)
    }
}

/// Ratios `r_{x_k}(n)` for every point `k` and `n = 1..=nmax`.
pub fn orbit_ratios(orbit: &PeriodicOrbit, e: &[Mat], f: &[Mat], nmax: usize) -> Vec<Vec<f64>> {
    let p = orbit.period();
    let (re, rf) = restricted_letters(orbit, e, f);
    (0..p)
        .map(|k| {
            let de = re[k].ncols();
            let df = rf[k].nrows();
            let mut fwd = Mat::identity(de, de);
            let mut bwd = Mat::identity(df, df);
            let mut log_scale = 0.0;
            let mut out = Vec::with_capacity(nmax);
            for n in 1..=nmax {
                let idx = (k + n - 1) % p;
                fwd = &re[idx] * fwd;
                bwd *= &rf[idx];
                for (m, _) in [(&mut fwd, 0), (&mut bwd, 1)] {
                    let s = if m.is_empty() { 1.0 } else { linalg::max_abs(m) };
                    if s > 0.0 {
                        *m /= s;
                        log_scale += s.ln();
                    }
                }
                out.push(norm_or_zero(&fwd) * norm_or_zero(&bwd) * f64::exp(log_scale));
            }
            out
        })
        .collect()
}

/// Single ratio evaluated from scratch with explicit powers of the
/// restricted letters.
pub fn domination_ratio(orbit: &PeriodicOrbit, e: &[Mat], f: &[Mat], k: usize, n: usize) -> f64 {
    let p = orbit.period();
    let (re, rf) = restricted_letters(orbit, e, f);
    let fwd = (0..n).fold(Mat::identity(re[k].ncols(), re[k].ncols()), |acc, s| &re[(k + s) % p] * acc);
    let bwd = (0..n).fold(Mat::identity(rf[k].nrows(), rf[k].nrows()), |acc, s| acc * &rf[(k + s) % p]);
    norm_or_zero(&fwd) * norm_or_zero(&bwd)
}

/// Checks that each letter maps the bundle into itself.
pub fn check_invariant(orbits: &[PeriodicOrbit], b: &Bundle) -> Result<()> {
    for (o, spaces) in orbits.iter().zip(b) {
        if spaces.len() != o.period() {
            return Err(Error::LengthMismatch(spaces.len(), o.period()));
        }
        let p = o.period();
        for k in 0..p {
            if spaces[k].nrows() != o.dim() {
                return Err(Error::DimensionMismatch { expected: o.dim(), found: spaces[k].nrows() });
            }
            if spaces[k].ncols() == 0 {
                continue;
            }
            let img = &o.letters[k] * &spaces[k];
            let defect = linalg::containment_defect(&img, &spaces[(k + 1) % p]);
            if defect > INVARIANCE_TOL || spaces[(k + 1) % p].ncols() != spaces[k].ncols() {
                return Err(Error::NotInvariant { orbit: o.id.clone(), point: k, defect });
            }
        }
    }
    Ok(())
}

fn normalize(b: &Bundle) -> Bundle {
    b.iter().map(|o| o.iter().map(bundle_basis).collect()).collect()
}

fn orbit_tables(orbits: &[PeriodicOrbit], e: &Bundle, f: &Bundle, ell: usize) -> Vec<(usize, Vec<Vec<f64>>)> {
    let idx: Vec<usize> = (0..orbits.len()).collect();
    par::map(&idx, |&i| {
        let o = &orbits[i];
        let h = horizon(ell, o.period(), o.dim());
        (h, orbit_ratios(o, &e[i], &f[i], h))
    })
}

fn fit_constants(worst: &[f64]) -> (f64, f64) {
    let pts: Vec<(f64, f64)> =
        worst.iter().enumerate().filter(|(_, r)| **r > 0.0).map(|(i, r)| ((i + 1) as f64, r.ln())).collect();
    if pts.len() < 2 {
        return (worst.iter().cloned().fold(0.0, f64::max), 0.5);
    }
    let m = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    let lambda = slope.exp().clamp(1e-300, 1.0 - 1e-12);
    let c = worst.iter().enumerate().map(|(i, r)| r / lambda.powi(i as i32 + 1)).fold(0.0, f64::max);
    (c, lambda)
}

fn restricted_spectrum(m: &Mat, q: &Mat) -> Vec<C64> {
    if q.ncols() == 0 {
        return Vec::new();
    }
    linalg::eigenvalues(&(q.transpose() * m * q))
}

fn spectral_tail(orbits: &[PeriodicOrbit], e: &Bundle, f: &Bundle) -> bool {
    orbits.iter().enumerate().all(|(i, o)| {
        let m = o.product();
        let top = restricted_spectrum(&m, &e[i][0]).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let bot = restricted_spectrum(&m, &f[i][0]).iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
        top < bot
    })
}

/// Domination check for arbitrary invariant bundles `E`, `F` (not required
/// to be complementary).
pub fn check_bundles(orbits: &[PeriodicOrbit], e: &Bundle, f: &Bundle, ell: usize) -> Result<DominationOutcome> {
    if ell == 0 {
        return Err(Error::Invalid("ℓ must be positive".into()));
    }
    check_invariant(orbits, e)?;
    check_invariant(orbits, f)?;
    let e = normalize(e);
    let f = normalize(f);
    let tables = orbit_tables(orbits, &e, &f, ell);
    let hmax = tables.iter().map(|t| t.0).max().unwrap_or(ell);
    let mut worst_by_n = vec![0.0_f64; hmax];
    let mut worst = 0.0_f64;
    for (oi, (h, tab)) in tables.iter().enumerate() {
        for n in ell..=*h {
            for (k, row) in tab.iter().enumerate() {
                let r = row[n - 1];
                if !(r < 0.5) {
                    return Ok(DominationOutcome::Counterexample(Counterexample {
                        orbit: orbits[oi].id.clone(),
                        point: k,
                        n,
                        ratio: r,
                    }));
                }
            }
        }
        for n in 1..=*h {
            for row in tab {
                worst_by_n[n - 1] = worst_by_n[n - 1].max(row[n - 1]);
                if n >= ell {
                    worst = worst.max(row[n - 1]);
                }
            }
        }
    }
    let (c, lambda) = fit_constants(&worst_by_n);
    let min_angle = orbits
        .iter()
        .enumerate()
        .flat_map(|(i, o)| (0..o.period()).map(move |k| (i, k)))
        .map(|(i, k)| linalg::min_angle(&e[i][k], &f[i][k]))
        .fold(std::f64::consts::FRAC_PI_2, f64::min);
    let mut splitting = BTreeMap::new();
    for (i, o) in orbits.iter().enumerate() {
        for k in 0..o.period() {
            splitting.insert(o.point_label(k), PointSplitting { e: columns_of(&e[i][k]), f: columns_of(&f[i][k]) });
        }
    }
    Ok(DominationOutcome::Certified(DominationCertificate {
        ell,
        worst_ratio: worst,
        horizon: hmax,
        c,
        lambda,
        spectral_tail: spectral_tail(orbits, &e, &f),
        min_angle,
        splitting,
    }))
}

impl DominationCertificate {
    /// Rebuilds the certified splitting over the orbits of `system`.
    pub fn to_splitting(&self, system: &CocycleSystem) -> Result<Splitting> {
        let mut e = Vec::new();
        let mut f = Vec::new();
        for o in &system.orbits {
            let mut eo = Vec::new();
            let mut fo = Vec::new();
            for k in 0..o.period() {
                let label = o.point_label(k);
                let p = self
                    .splitting
                    .get(&label)
                    .ok_or_else(|| Error::Parse(format!("certificate has no point {label}")))?;
                eo.push(from_columns(&p.e, o.dim(), &label)?);
                fo.push(from_columns(&p.f, o.dim(), &label)?);
            }
            e.push(eo);
            f.push(fo);
        }
        Ok(Splitting { ids: system.orbits.iter().map(|o| o.id.clone()).collect(), e, f })
    }

    /// Re-runs the check at the certified `ℓ`.
    pub fn revalidate(&self, system: &CocycleSystem) -> Result<DominationOutcome> {
        check_domination(system, &self.to_splitting(system)?, self.ell)
    }
}

fn from_columns(cols: &[Vec<f64>], dim: usize, label: &str) -> Result<Mat> {
    if cols.iter().any(|c| c.len() != dim) {
        return Err(Error::Parse(format!("certificate point {label}: columns must have length {dim}")));
    }
    Ok(Mat::from_fn(dim, cols.len(), |r, c| cols[c][r]))
}

fn columns_of(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.ncols()).map(|c| m.column(c).iter().cloned().collect()).collect()
}

fn check_complementary(orbits: &[PeriodicOrbit], s: &Splitting) -> Result<()> {
    for (i, o) in orbits.iter().enumerate() {
        for k in 0..o.period() {
            let (e, f) = (&s.e[i][k], &s.f[i][k]);
            if e.ncols() + f.ncols() != o.dim() || linalg::rank(&linalg::hcat(&[e, f]), 1e-9) < o.dim() {
                return Err(Error::NotComplementary);
            }
        }
    }
    Ok(())
}

/// Certifies `‖Aⁿ|E(x)‖·‖A⁻ⁿ|F(fⁿx)‖ < 1/2` for all points and all `n ≥ ℓ`,
/// or returns the first violation found.
pub fn check_domination(system: &CocycleSystem, splitting: &Splitting, ell: usize) -> Result<DominationOutcome> {
    if splitting.e.len() != system.orbits.len() || splitting.f.len() != system.orbits.len() {
        return Err(Error::LengthMismatch(splitting.e.len(), system.orbits.len()));
    }
    check_invariant(&system.orbits, &splitting.e)?;
    check_invariant(&system.orbits, &splitting.f)?;
    check_complementary(&system.orbits, splitting)?;
    check_bundles(&system.orbits, &splitting.e, &splitting.f, ell)
}

/// Smallest `ℓ ≤ ell_max` certified for the bundles.
pub fn minimal_ell(
    orbits: &[PeriodicOrbit],
    e: &Bundle,
    f: &Bundle,
    ell_max: usize,
) -> Result<Option<DominationCertificate>> {
    check_invariant(orbits, e)?;
    check_invariant(orbits, f)?;
    let en = normalize(e);
    let fnm = normalize(f);
    let tables = orbit_tables(orbits, &en, &fnm, ell_max);
    let ok = |ell: usize| {
        tables.iter().zip(orbits).all(|((_, tab), o)| {
            let h = horizon(ell, o.period(), o.dim());
            (ell..=h).all(|n| tab.iter().all(|row| row[n - 1] < 0.5))
        })
    };
    for ell in 1..=ell_max {
        if ok(ell) {
            return Ok(check_bundles(orbits, e, f, ell)?.certificate().cloned());
        }
    }
    Ok(None)
}

/// Real invariant subspace spanned by the eigenvectors of `values`
/// (closed under conjugation). Fails on defective eigenvalues.
pub fn invariant_span(m: &Mat, values: &[C64]) -> std::result::Result<Mat, String> {
    let d = m.nrows();
    if values.is_empty() {
        return Ok(Mat::zeros(d, 0));
    }
    let scale = linalg::op_norm(m).max(1.0);
    let mut clusters: Vec<(C64, usize)> = Vec::new();
    for &v in values {
        match clusters.iter_mut().find(|(c, _)| (c - v).norm() <= 1e-6 * c.norm().max(1.0)) {
            Some(c) => c.1 += 1,
            None => clusters.push((v, 1)),
        }
    }
    let mut cols = Vec::new();
    for (c, k) in clusters {
        let mut a = linalg::to_complex(m);
        for i in 0..d {
            a[(i, i)] -= c;
        }
        let svd = a.svd(false, true);
        let vt = svd.v_t.unwrap();
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&x, &y| svd.singular_values[x].total_cmp(&svd.singular_values[y]));
        if svd.singular_values[order[k - 1]] > 1e-6 * scale {
            return Err(format!("eigenvalue {:.6}{:+.6}i is defective", c.re, c.im));
        }
        for &r in order.iter().take(k) {
            let v = vt.row(r).transpose().map(|z| z.conj());
            cols.push(v.map(|z| z.re));
            cols.push(v.map(|z| z.im));
        }
    }
    let q = linalg::orthonormal_basis(&linalg::span(&cols), 1e-8);
    if q.ncols() != values.len() {
        return Err(format!("eigenvectors span {} of {} dimensions", q.ncols(), values.len()));
    }
    Ok(q)
}

/// Eigenvalues sorted by modulus, ties broken by argument.
pub fn sorted_spectrum(m: &Mat) -> Vec<C64> {
    let mut ev = linalg::eigenvalues(m);
    ev.sort_by(|a, b| a.norm().total_cmp(&b.norm()).then(a.im.total_cmp(&b.im)));
    ev
}

/// Splits the fiber at point 0 into the sum of eigenspaces of the `i`
/// smallest-modulus eigenvalues and the rest.
pub fn spectral_split(m: &Mat, i: usize) -> std::result::Result<(Mat, Mat), String> {
    let ev = sorted_spectrum(m);
    let d = ev.len();
    if i == 0 || i >= d {
        return Err(format!("index {i} out of range 1..{}", d - 1));
    }
    let (lo, hi) = (ev[i - 1].norm(), ev[i].norm());
    if hi - lo <= 1e-9 * hi.max(1.0) {
        return Err(format!("no modulus gap between positions {i} and {}", i + 1));
    }
    Ok((invariant_span(m, &ev[..i])?, invariant_span(m, &ev[i..])?))
}

/// Carries a subspace at point 0 around the orbit.
pub fn transport(orbit: &PeriodicOrbit, start: &Mat) -> Vec<Mat> {
    let mut out = Vec::with_capacity(orbit.period());
    let mut cur = linalg::orthonormal_basis(start, 1e-12);
    for k in 0..orbit.period() {
        out.push(cur.clone());
        if start.ncols() > 0 {
            cur = linalg::orthonormal_basis(&(&orbit.letters[k] * &cur), 1e-12);
        }
    }
    out
}

#[derive(Debug, Clone)]
pub enum SplittingSearch {
    Found { splitting: Splitting, certificate: DominationCertificate },
    NotFound { ell_max: usize, reason: String },
}

impl SplittingSearch {
    pub fn ell(&self) -> Option<usize> {
        match self {
            SplittingSearch::Found { certificate, .. } => Some(certificate.ell),
            SplittingSearch::NotFound { .. } => None,
        }
    }
}

/// Eigenspace-sum splitting with `dim E = i` (1-based count) and its
/// minimal dominance index.
pub fn find_splitting(system: &CocycleSystem, i: usize, ell_max: usize) -> Result<SplittingSearch> {
    let d = system.space.dim();
    if i == 0 || i >= d {
        return Err(Error::Invalid(format!("index {i} outside 1..{}", d - 1)));
    }
    let mut e = Vec::new();
    let mut f = Vec::new();
    for o in &system.orbits {
        match spectral_split(&o.product(), i) {
            Ok((a, b)) => {
                e.push(transport(o, &a));
                f.push(transport(o, &b));
            }
            Err(reason) => {
                return Ok(SplittingSearch::NotFound { ell_max, reason: format!("orbit {}: {reason}", o.id) })
            }
        }
    }
    let ids = system.orbits.iter().map(|o| o.id.clone()).collect();
    match minimal_ell(&system.orbits, &e, &f, ell_max)? {
        Some(certificate) => Ok(SplittingSearch::Found { splitting: Splitting { ids, e, f }, certificate }),
        None => Ok(SplittingSearch::NotFound { ell_max, reason: format!("no ℓ ≤ {ell_max} certifies") }),
    }
}

/// Quotient of a cocycle along an invariant bundle `F`, in the metric of
/// `F^⊥`: letters `U_{k+1}ᵀ A_k U_k` with `U_k` an orthonormal basis of
/// `F(x_k)^⊥`.
#[derive(Debug, Clone)]
pub struct Quotient {
    pub orbits: Vec<PeriodicOrbit>,
    pub complements: Bundle,
}

impl Quotient {
    /// Image of a bundle in quotient coordinates.
    pub fn project(&self, b: &Bundle) -> Bundle {
        b.iter()
            .zip(&self.complements)
            .map(|(o, us)| o.iter().zip(us).map(|(m, u)| bundle_basis(&(u.transpose() * m))).collect())
            .collect()
    }
}

pub fn quotient(orbits: &[PeriodicOrbit], f: &Bundle) -> Result<Quotient> {
    check_invariant(orbits, f)?;
    let mut out = Vec::new();
    let mut comps = Vec::new();
    for (o, fs) in orbits.iter().zip(f) {
        let us: Vec<Mat> = fs
            .iter()
            .map(|b| {
                if b.ncols() == 0 {
                    Mat::identity(o.dim(), o.dim())
                } else {
                    linalg::null_space(&bundle_basis(b).transpose(), 1e-10)
                }
            })
            .collect();
        let p = o.period();
        let letters = (0..p).map(|k| us[(k + 1) % p].transpose() * &o.letters[k] * &us[k]).collect();
        out.push(PeriodicOrbit { id: o.id.clone(), letters });
        comps.push(us);
    }
    Ok(Quotient { orbits: out, complements: comps })
}

pub fn quotient_system(system: &CocycleSystem, f: &Bundle) -> Result<Quotient> {
    quotient(&system.orbits, f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LiftCase {
    /// `E ≺ F` and `E/F ≺ G/F` give `E ≺ F ⊕ G`.
    Lower,
    /// `F ≺ G` and `E/F ≺ G/F` give `E ⊕ F ≺ G`.
    Upper,
}

#[derive(Debug, Clone)]
pub struct Lift {
    pub case: LiftCase,
    pub big_l: usize,
    pub certificate: DominationCertificate,
}

fn direct_sum(a: &Bundle, b: &Bundle) -> Bundle {
    a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(p, q)| bundle_basis(&linalg::hcat(&[p, q]))).collect()).collect()
}

/// Combines a domination and a quotient domination at index `ell` into a
/// domination of the coarser splitting; `L` is the first index from `ell`
/// upward that certifies.
pub fn lift_domination(
    orbits: &[PeriodicOrbit],
    e: &Bundle,
    f: &Bundle,
    g: &Bundle,
    ell: usize,
    l_max: usize,
) -> Result<Lift> {
    let q = quotient(orbits, f)?;
    let ef = q.project(e);
    let gf = q.project(g);
    let quotient_ok = check_bundles(&q.orbits, &ef, &gf, ell)?.is_certified();
    if !quotient_ok {
        return Err(Error::Hypothesis(format!("E/F is not {ell}-dominated by G/F")));
    }
    let cases = [
        (LiftCase::Lower, check_bundles(orbits, e, f, ell)?.is_certified()),
        (LiftCase::Upper, check_bundles(orbits, f, g, ell)?.is_certified()),
    ];
    for (case, holds) in cases {
        if !holds {
            continue;
        }
        let (lo, hi) = match case {
            LiftCase::Lower => (e.clone(), direct_sum(f, g)),
            LiftCase::Upper => (direct_sum(e, f), g.clone()),
        };
        for big_l in ell..=l_max {
            if let DominationOutcome::Certified(c) = check_bundles(orbits, &lo, &hi, big_l)? {
                return Ok(Lift { case, big_l, certificate: c });
            }
        }
        return Err(Error::stage("lift_domination", format!("no L ≤ {l_max} certifies")));
    }
    Err(Error::Hypothesis(format!("neither E ≺ F nor F ≺ G holds at ℓ = {ell}")))
}
