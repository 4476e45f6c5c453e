//! End-to-end driver: either a dominated splitting of the whole system or a
//! small perturbation carrying a periodic orbit whose period map is the
//! identity.

use crate::cocycle::{CocycleSystem, PeriodicOrbit};
use crate::domination::{find_splitting, DominationCertificate, Splitting, SplittingSearch};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat, C64};
use crate::par;
use crate::perturbation::{
    collapse_and_complexify, diagonalize, has_rank_complex, orbit_distance, CollapseOptions, CollapseOutcome,
};
use crate::transitions::{
    elliptic_word, swap_transition, EllipticWord, OrbitData, SwapCertificate, SwapOptions, TrackedWord,
};
use serde_json::{json, Value};

/// Residual below which a period map counts as the identity.
pub const IDENTITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct DichotomyOptions {
    pub collapse: CollapseOptions,
    /// Eigenvalue separation requested when diagonalizing.
    pub gap: f64,
    /// Largest dominance index searched for a certificate.
    pub ell_max: usize,
    /// Rotation angle below which a witness pair is spun faster.
    pub min_turn: f64,
    /// Exponent of the identity word; `None` takes the smallest admissible.
    pub n: Option<usize>,
    /// Identifier of the orbit added by the elliptic branch.
    pub new_orbit: String,
    /// Seed of the generic-position nudges used while aligning transitions.
    pub seed: u64,
}

impl Default for DichotomyOptions {
    fn default() -> Self {
        DichotomyOptions {
            collapse: CollapseOptions::default(),
            gap: 1e-3,
            ell_max: 200,
            min_turn: 0.5,
            n: None,
            new_orbit: "x_n".into(),
            seed: crate::transitions::AlignOptions::default().seed,
        }
    }
}

#[derive(Debug, Clone)]
pub enum RankStatus {
    /// `witness` is a perturbation of orbit `orbit` whose period map has a
    /// complex pair of the scanned rank.
    Achieved {
        orbit: String,
        witness: PeriodicOrbit,
        distance: f64,
        eigenvalue: C64,
        pair: Option<(usize, usize)>,
    },
    /// Every attempt stopped at a dominated quotient.
    Obstructed {
        certificates: Vec<DominationCertificate>,
    },
    Inconclusive {
        reasons: Vec<String>,
    },
}

#[derive(Debug, Clone)]
pub struct RankReport {
    /// 1-based index: the pair at ranks `i`, `i + 1`.
    pub i: usize,
    pub status: RankStatus,
}

impl RankReport {
    pub fn achieved(&self) -> bool {
        matches!(self.status, RankStatus::Achieved { .. })
    }
}

fn rank_eigenvalue(m: &Mat, i: usize) -> C64 {
    let ev = crate::domination::sorted_spectrum(m);
    let z = ev[i - 1];
    if z.im < 0.0 {
        z.conj()
    } else {
        z
    }
}

fn scan_orbit(
    system: &CocycleSystem,
    orbit: &PeriodicOrbit,
    i: usize,
    eps0: f64,
    opts: &DichotomyOptions,
    certificates: &mut Vec<DominationCertificate>,
    reasons: &mut Vec<String>,
) -> Option<RankStatus> {
    let space = &system.space;
    let d = space.dim();
    let m = orbit.product();
    if has_rank_complex(&m, i) {
        return Some(RankStatus::Achieved {
            orbit: orbit.id.clone(),
            witness: orbit.clone(),
            distance: 0.0,
            eigenvalue: rank_eigenvalue(&m, i),
            pair: None,
        });
    }
    let diag = match diagonalize(space, orbit, eps0 / 2.0, opts.gap) {
        Ok(x) => x,
        Err(e) => {
            reasons.push(format!("{}: diagonalize: {e}", orbit.id));
            return None;
        }
    };
    let rest = eps0 - diag.distance;
    let mut pairs: Vec<(usize, usize)> = (1..=i).flat_map(|j| (i..d).map(move |k| (j, k))).collect();
    pairs.sort_by_key(|&(j, k)| (k - j, j));
    for (j, k) in pairs {
        let out = collapse_and_complexify(space, &diag.orbit, i, j, k, rest, opts.collapse);
        let witness = match out {
            Ok(CollapseOutcome::AlreadyComplex) => diag.orbit.clone(),
            Ok(CollapseOutcome::Complexified(rep)) => rep.orbit,
            Ok(CollapseOutcome::Obstructed { certificate }) => {
                certificates.push(certificate);
                continue;
            }
            Ok(CollapseOutcome::NoEvent { reason, .. }) => {
                reasons.push(format!("{} ({j}, {k}): {reason}", orbit.id));
                continue;
            }
            Err(e) => {
                reasons.push(format!("{} ({j}, {k}): {e}", orbit.id));
                continue;
            }
        };
        let distance = orbit_distance(&witness, orbit);
        let wm = witness.product();
        if distance <= eps0 * (1.0 + 1e-12) && has_rank_complex(&wm, i) {
            return Some(RankStatus::Achieved {
                orbit: orbit.id.clone(),
                eigenvalue: rank_eigenvalue(&wm, i),
                witness,
                distance,
                pair: Some((j, k)),
            });
        }
        reasons.push(format!("{} ({j}, {k}): witness off budget ({distance:.3e})", orbit.id));
    }
    None
}

/// Orbits in scan order, the designated one first.
fn scan_order(system: &CocycleSystem) -> Vec<&PeriodicOrbit> {
    let first = system.designated_orbit().ok().map(|o| o.id.clone());
    let mut out: Vec<&PeriodicOrbit> = system.orbits.iter().filter(|o| Some(&o.id) == first.as_ref()).collect();
    out.extend(system.orbits.iter().filter(|o| Some(&o.id) != first.as_ref()));
    out
}

/// For each index `i = 1..2N−1`, looks for an orbit that an
/// `eps0`-perturbation gives a complex pair at ranks `(i, i + 1)`.
pub fn scan_ranks(system: &CocycleSystem, eps0: f64, opts: &DichotomyOptions) -> Vec<RankReport> {
    let d = system.space.dim();
    let order = scan_order(system);
    par::map_range(d - 1, |idx| {
        let i = idx + 1;
        let mut certificates = Vec::new();
        let mut reasons = Vec::new();
        for orbit in &order {
            if let Some(status) = scan_orbit(system, orbit, i, eps0, opts, &mut certificates, &mut reasons) {
                return RankReport { i, status };
            }
        }
        let status = if reasons.is_empty() && !certificates.is_empty() {
            RankStatus::Obstructed { certificates }
        } else {
            RankStatus::Inconclusive { reasons }
        };
        RankReport { i, status }
    })
}

#[derive(Debug, Clone)]
pub struct BudgetEntry {
    pub stage: String,
    pub change: f64,
    pub allowed: f64,
}

#[derive(Debug, Clone)]
pub struct Parameters {
    pub eps: f64,
    pub eps0: f64,
    pub eps1: f64,
    /// Norm bound of the input system.
    pub k: f64,
    /// Half dimension.
    pub n: usize,
}

#[derive(Debug, Clone)]
pub struct DominatedVerdict {
    pub i: usize,
    pub splitting: Splitting,
    pub certificate: DominationCertificate,
    /// Certificates at the other non-complexified indices.
    pub others: Vec<(usize, DominationCertificate)>,
}

#[derive(Debug, Clone)]
pub struct EllipticVerdict {
    /// Input system with the new orbit appended.
    pub system: CocycleSystem,
    pub point: String,
    pub residual: f64,
    /// Letter-wise distance of the new orbit from its unperturbed word.
    pub distance: f64,
    pub word: Option<EllipticWord>,
    pub swaps: Vec<SwapCertificate>,
    pub ledger: Vec<BudgetEntry>,
}

#[derive(Debug, Clone)]
pub enum Verdict {
    Dominated(Box<DominatedVerdict>),
    Elliptic(Box<EllipticVerdict>),
}

#[derive(Debug, Clone)]
pub struct DichotomyVerdict {
    pub params: Parameters,
    pub scan: Vec<RankReport>,
    pub verdict: Verdict,
}

impl DichotomyVerdict {
    pub fn is_dominated(&self) -> bool {
        matches!(self.verdict, Verdict::Dominated(_))
    }

    pub fn is_elliptic(&self) -> bool {
        matches!(self.verdict, Verdict::Elliptic(_))
    }

    pub fn ell(&self) -> Option<usize> {
        match &self.verdict {
            Verdict::Dominated(v) => Some(v.certificate.ell),
            Verdict::Elliptic(_) => None,
        }
    }

    pub fn to_json(&self) -> Value {
        let p = &self.params;
        let scan: Vec<Value> = self
            .scan
            .iter()
            .map(|r| match &r.status {
                RankStatus::Achieved { orbit, distance, eigenvalue, pair, .. } => json!({
                    "i": r.i, "status": "achieved", "orbit": orbit, "distance": distance,
                    "eigenvalue": [eigenvalue.re, eigenvalue.im], "pair": pair,
                }),
                RankStatus::Obstructed { certificates } => json!({
                    "i": r.i, "status": "obstructed",
                    "ell": certificates.iter().map(|c| c.ell).collect::<Vec<_>>(),
                }),
                RankStatus::Inconclusive { reasons } => {
                    json!({ "i": r.i, "status": "inconclusive", "reasons": reasons })
                }
            })
            .collect();
        let verdict = match &self.verdict {
            Verdict::Dominated(v) => json!({
                "kind": "dominated",
                "i": v.i,
                "certificate": v.certificate,
                "others": v.others.iter().map(|(i, c)| json!({"i": i, "ell": c.ell})).collect::<Vec<_>>(),
            }),
            Verdict::Elliptic(v) => json!({
                "kind": "elliptic",
                "point": v.point,
                "residual": v.residual,
                "distance": v.distance,
                "n": v.word.as_ref().map(|w| w.n),
                "C": v.word.as_ref().map(|w| w.c.clone()),
                "pairing_defect": v.word.as_ref().map(|w| w.pairing_defect),
                "word_length": v.word.as_ref().map(|w| w.word.len()),
                "swaps": v.swaps.iter().map(|s| json!({
                    "i": s.i, "k": s.k, "m": s.m, "spin": s.spin,
                    "max_angle": s.table.max_angle(), "r": s.table.r,
                })).collect::<Vec<_>>(),
                "ledger": v.ledger.iter().map(|b| json!({
                    "stage": b.stage, "change": b.change, "allowed": b.allowed,
                })).collect::<Vec<_>>(),
            }),
        };
        json!({
            "parameters": {"eps": p.eps, "eps0": p.eps0, "eps1": p.eps1, "K": p.k, "N": p.n},
            "scan": scan,
            "verdict": verdict,
        })
    }
}

fn dominated(system: &CocycleSystem, scan: &[RankReport], opts: &DichotomyOptions) -> Result<Option<DominatedVerdict>> {
    let mut found: Option<DominatedVerdict> = None;
    let mut misses = Vec::new();
    for r in scan.iter().filter(|r| !r.achieved()) {
        match find_splitting(system, r.i, opts.ell_max)? {
            SplittingSearch::Found { splitting, certificate } => match &mut found {
                None => found = Some(DominatedVerdict { i: r.i, splitting, certificate, others: Vec::new() }),
                Some(v) => v.others.push((r.i, certificate)),
            },
            SplittingSearch::NotFound { reason, .. } => misses.push(format!("i = {}: {reason}", r.i)),
        }
    }
    if found.is_none() && !misses.is_empty() {
        return Err(Error::stage(
            "dichotomy",
            format!("indices neither complexified nor dominated: {}", misses.join("; ")),
        ));
    }
    Ok(found)
}

fn tracked(system: &CocycleSystem, from: &str, to: &str) -> Result<TrackedWord> {
    system
        .transition(from, to)
        .map(|t| TrackedWord::new(t.clone()))
        .ok_or_else(|| Error::MissingTransition { from: from.into(), to: to.into() })
}

fn unique_id(system: &CocycleSystem, base: &str) -> String {
    let mut id = base.to_string();
    let mut k = 1;
    while system.orbits.iter().any(|o| o.id == id) {
        k += 1;
        id = format!("{base}_{k}");
    }
    id
}

fn with_orbit(system: &CocycleSystem, orbit: PeriodicOrbit) -> Result<CocycleSystem> {
    let mut out = system.clone();
    out.orbits.push(orbit);
    out.bound = out.system_norm()?;
    Ok(out)
}

fn elliptic(
    system: &CocycleSystem,
    scan: &[RankReport],
    params: &Parameters,
    opts: &DichotomyOptions,
) -> Result<EllipticVerdict> {
    let space = &system.space;
    let d = space.dim();
    let (eps0, eps1) = (params.eps0, params.eps1);
    let p = system.designated_orbit()?;
    let mut ledger = Vec::new();

    let residual = linalg::op_norm(&(p.product() - Mat::identity(d, d)));
    if residual <= IDENTITY_TOL {
        return Ok(EllipticVerdict {
            system: system.clone(),
            point: p.id.clone(),
            residual,
            distance: 0.0,
            word: None,
            swaps: Vec::new(),
            ledger,
        });
    }

    let diag = diagonalize(space, p, eps1 / 2.0, opts.gap)?;
    ledger.push(BudgetEntry { stage: "diagonalize".into(), change: diag.distance, allowed: eps1 / 2.0 });
    let pdata = OrbitData::new(space, diag.orbit.clone(), p.letters.clone())?;

    let swap_opts = SwapOptions {
        align: crate::transitions::AlignOptions { budget: Some(eps1 / 2.0), seed: opts.seed, ..Default::default() },
        budget: eps1 / 2.0,
        spin_budget: eps1 / 2.0,
        min_turn: opts.min_turn,
        ..Default::default()
    };
    let jobs: Vec<(usize, &PeriodicOrbit, &String, f64)> = (1..=space.half_dim())
        .map(|g| match &scan[g - 1].status {
            RankStatus::Achieved { orbit, witness, distance, .. } => Ok((g, witness, orbit, *distance)),
            _ => Err(Error::stage("dichotomy", format!("index {g} has no witness"))),
        })
        .collect::<Result<_>>()?;
    let built = par::map(&jobs, |&(g, witness, id, _)| -> Result<SwapCertificate> {
        let original = system.orbit(id)?;
        let pi = OrbitData::new(space, witness.clone(), original.letters.clone())?;
        let fwd = tracked(system, &p.id, id)?;
        let back = tracked(system, id, &p.id)?;
        swap_transition(space, &pdata, &pi, g, &fwd, &back, &swap_opts)
    });
    let mut swaps = Vec::new();
    for (&(g, _, id, dist), s) in jobs.iter().zip(built) {
        let s = s.map_err(|e| Error::stage(&format!("swap {g}"), e.to_string()))?;
        ledger.push(BudgetEntry { stage: format!("witness {g} ({id})"), change: dist, allowed: eps0 });
        let align = s
            .forward
            .iter()
            .chain(&s.backward)
            .map(|st| st.landing_change.max(st.corrector_change))
            .fold(0.0, f64::max);
        ledger.push(BudgetEntry { stage: format!("swap {g}: alignment"), change: align, allowed: eps1 / 2.0 });
        let st = s.straighten_changes[0].max(s.straighten_changes[1]);
        ledger.push(BudgetEntry { stage: format!("swap {g}: straightening"), change: st, allowed: eps1 / 2.0 });
        swaps.push(s);
    }

    let word = elliptic_word(space, &pdata, &swaps, opts.n, eps1 / 2.0)?;
    ledger.push(BudgetEntry { stage: "correction".into(), change: word.correction_change, allowed: eps1 / 2.0 });
    let total = eps0 + 2.0 * eps1;
    ledger.push(BudgetEntry { stage: "word".into(), change: word.distance, allowed: total });
    if word.distance > total {
        return Err(Error::Budget { stage: "dichotomy: word".into(), needed: word.distance, allowed: total });
    }
    if word.residual > IDENTITY_TOL {
        return Err(Error::stage("dichotomy", format!("identity residual {:.3e}", word.residual)));
    }
    let point = unique_id(system, &opts.new_orbit);
    let orbit = PeriodicOrbit::new(point.clone(), word.word.word.letters.clone())?;
    let out = with_orbit(system, orbit)?;
    Ok(EllipticVerdict {
        system: out,
        point,
        residual: word.residual,
        distance: word.distance,
        swaps,
        word: Some(word),
        ledger,
    })
}

fn parameters(system: &CocycleSystem, eps: f64) -> Result<Parameters> {
    if eps <= 0.0 || !eps.is_finite() {
        return Err(Error::Invalid(format!("perturbation size must be positive, got {eps}")));
    }
    Ok(Parameters { eps, eps0: eps / 4.0, eps1: eps / 8.0, k: system.system_norm()?, n: system.space.half_dim() })
}

/// Runs the dichotomy with `ε₀ = ε/4` for the rank scan and `ε₁ = ε/8`
/// for each correction stage.
pub fn run_dichotomy(system: &CocycleSystem, eps: f64, opts: &DichotomyOptions) -> Result<DichotomyVerdict> {
    let params = parameters(system, eps)?;
    let scan = scan_ranks(system, params.eps0, opts);
    let verdict = match dominated(system, &scan, opts)? {
        Some(v) => Verdict::Dominated(Box::new(v)),
        None => Verdict::Elliptic(Box::new(elliptic(system, &scan, &params, opts)?)),
    };
    Ok(DichotomyVerdict { params, scan, verdict })
}

/// Builds the identity orbit directly, skipping the domination search.
/// Fails when some rank up to `N` has no complex witness.
pub fn run_elliptic(system: &CocycleSystem, eps: f64, opts: &DichotomyOptions) -> Result<DichotomyVerdict> {
    let params = parameters(system, eps)?;
    let scan = scan_ranks(system, params.eps0, opts);
    let verdict = Verdict::Elliptic(Box::new(elliptic(system, &scan, &params, opts)?));
    Ok(DichotomyVerdict { params, scan, verdict })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocycle::TransitionWord;
    use crate::domination::check_domination;
    use crate::symplectic::{rotation, SymplecticSpace};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn system(s: SymplecticSpace, orbits: Vec<PeriodicOrbit>, t: Vec<TransitionWord>) -> CocycleSystem {
        CocycleSystem::new(s, orbits).unwrap().with_transitions(t).unwrap()
    }

    fn fast() -> DichotomyOptions {
        let mut o = DichotomyOptions::default();
        o.collapse.samples = 200;
        o.collapse.mane.samples = 200;
        o
    }

    #[test]
    fn hyperbolic_line_is_dominated() {
        let s = SymplecticSpace::standard_form(1).unwrap();
        let p = PeriodicOrbit::new("p", vec![s.diagonal(&[4.0])]).unwrap();
        let t = TransitionWord::new("p", "p", vec![s.identity()]);
        let sys = system(s, vec![p], vec![t]);
        let v = run_dichotomy(&sys, 0.1, &fast()).unwrap();
        assert!(v.is_dominated());
        assert_eq!(v.ell(), Some(1));
        if let Verdict::Dominated(d) = &v.verdict {
            assert!(check_domination(&sys, &d.splitting, 1).unwrap().is_certified());
        }
    }

    #[test]
    fn identity_orbit_is_already_elliptic() {
        let s = SymplecticSpace::standard_form(1).unwrap();
        let p = PeriodicOrbit::new("p", vec![rotation(0.3), rotation(-0.3)]).unwrap();
        let sys = system(s, vec![p], Vec::new());
        let v = run_dichotomy(&sys, 0.1, &fast()).unwrap();
        match v.verdict {
            Verdict::Elliptic(e) => assert!(e.word.is_none() && e.residual < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    /// Period-`period` orbit of equal near-identity letters with period map
    /// conjugate to `diag(lams, 1/lams)`, and a near-identity self-transition.
    pub(crate) fn designated(n: usize, lams: &[f64], period: usize, seed: u64) -> CocycleSystem {
        let s = SymplecticSpace::standard_form(n).unwrap();
        let q = s.random_symplectic(&mut ChaCha8Rng::seed_from_u64(seed), 0.2);
        let root: Vec<f64> = lams.iter().map(|l| l.powf(1.0 / period as f64)).collect();
        let a = &q * s.diagonal(&root) * s.symplectic_inverse(&q);
        let p = PeriodicOrbit::new("p", vec![a; period]).unwrap();
        let t =
            TransitionWord::new("p", "p", vec![s.random_symplectic(&mut ChaCha8Rng::seed_from_u64(seed + 1), 0.01)]);
        system(s, vec![p], vec![t])
    }

    fn check_elliptic(sys: &CocycleSystem, eps: f64) {
        let v = run_dichotomy(sys, eps, &fast()).unwrap();
        match &v.verdict {
            Verdict::Elliptic(e) => {
                assert!(e.residual <= 1e-6, "{}", e.residual);
                assert!(e.distance <= eps * 0.5 + 1e-12);
                for b in &e.ledger {
                    assert!(b.change <= b.allowed * (1.0 + 1e-9), "{b:?}");
                }
                let w = e.word.as_ref().unwrap();
                assert!(w.pairing_defect < 1e-8);
                let x = e.system.orbit(&e.point).unwrap();
                let d = sys.space.dim();
                assert!(linalg::op_norm(&(x.product() - Mat::identity(d, d))) <= 1e-6);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn near_identity_line_becomes_identity() {
        check_elliptic(&designated(1, &[1.05], 8, 3), 0.4);
    }

    #[test]
    fn near_identity_four_dimensional_instance() {
        check_elliptic(&designated(2, &[1.08, 1.04], 8, 5), 0.4);
    }

    #[test]
    fn domination_at_middle_index_only() {
        let s = SymplecticSpace::standard_form(2).unwrap();
        // Pairs (1, 2) and (3, 4) nearly coincide; the middle gap is wide.
        let p = PeriodicOrbit::new("p", vec![s.diagonal(&[6.0, 5.8])]).unwrap();
        let t = TransitionWord::new("p", "p", vec![s.identity()]);
        let sys = system(s, vec![p], vec![t]);
        let v = run_dichotomy(&sys, 0.8, &fast()).unwrap();
        assert!(v.scan[0].achieved() && v.scan[2].achieved());
        assert!(!v.scan[1].achieved());
        match &v.verdict {
            Verdict::Dominated(d) => assert_eq!(d.i, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_transition_is_reported() {
        let s = SymplecticSpace::standard_form(1).unwrap();
        let p = PeriodicOrbit::new("p", vec![s.diagonal(&[1.02])]).unwrap();
        let sys = system(s, vec![p], Vec::new());
        let err = run_dichotomy(&sys, 0.4, &fast()).unwrap_err();
        assert!(err.to_string().contains("missing transition"), "{err}");
    }
}
