//! Transitions mapping the spectral blocks of one orbit onto those of
//! another, built outside-in: each level lands the outermost pair of blocks
//! and the symplectic form carries the inner blocks along.

use super::{multi_transvection, Block, OrbitData, TrackedWord};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::perturbation::realize_on_frame;
use crate::symplectic::SymplecticSpace;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy)]
pub struct AlignOptions {
    /// Angle below which a pushed subspace counts as landed.
    pub theta: f64,
    /// Cap on the orbit powers used for pushing.
    pub cap: usize,
    /// Size of a generic-position nudge.
    pub nudge: f64,
    pub retries: usize,
    pub seed: u64,
    /// Largest letter change allowed for a single correction.
    pub budget: Option<f64>,
}

impl Default for AlignOptions {
    fn default() -> Self {
        AlignOptions { theta: 1e-6, cap: 200, nudge: 1e-4, retries: 8, seed: 0xa11e, budget: None }
    }
}

#[derive(Debug, Clone)]
pub struct AlignStep {
    pub level: usize,
    /// Dimension of the blocks landed at this level.
    pub dim: usize,
    /// Target-orbit periods appended.
    pub n_target: usize,
    /// Source-orbit periods prepended.
    pub n_source: usize,
    pub nudges: usize,
    /// Angles to the target blocks before the exact corrections.
    pub top_angle: f64,
    pub bottom_angle: f64,
    /// Letter changes made by the landing map and the corrector.
    pub landing_change: f64,
    pub corrector_change: f64,
    pub defect: f64,
}

#[derive(Debug, Clone)]
pub struct Aligned {
    pub word: TrackedWord,
    pub matrix: Mat,
    pub steps: Vec<AlignStep>,
}

impl Aligned {
    /// Largest containment defect of a source block image in its target block.
    pub fn defect(&self, source: &OrbitData, target: &OrbitData, layout: &[Block]) -> f64 {
        layout
            .iter()
            .map(|b| linalg::containment_defect(&(&self.matrix * source.block_basis(b)), &target.block_basis(b)))
            .fold(0.0, f64::max)
    }
}

fn check_layout(space: &SymplecticSpace, layout: &[Block]) -> Result<()> {
    let d = space.dim();
    let mut next = 0;
    for b in layout {
        if b.start != next || !(1..=2).contains(&b.dim) {
            return Err(Error::Invalid("layout must tile the ranks with lines and planes".into()));
        }
        next = b.end();
    }
    if next != d {
        return Err(Error::Invalid(format!("layout covers {next} of {d} ranks")));
    }
    for (k, b) in layout.iter().enumerate() {
        let c = layout[layout.len() - 1 - k];
        if c.dim != b.dim || c.start != d - b.end() {
            return Err(Error::Invalid("layout is not symmetric under the pairing".into()));
        }
    }
    Ok(())
}

fn check_budget(change: f64, opts: &AlignOptions, stage: &str) -> Result<()> {
    match opts.budget {
        Some(b) if change > b => Err(Error::Budget { stage: stage.into(), needed: change, allowed: b }),
        _ => Ok(()),
    }
}

fn angle_to(x: &Mat, target: &Mat) -> f64 {
    linalg::subspace_angle(x, target)
}

/// Random symplectic map near the identity acting on the span of the basis
/// columns `ranks` (a symmetric set) and trivially on its complement.
fn nudge(space: &SymplecticSpace, basis: &Mat, ranks: &[usize], size: f64, rng: &mut ChaCha8Rng) -> Result<Mat> {
    let m = ranks.len() / 2;
    let local = SymplecticSpace::standard_form(m)?;
    let h = Mat::from_fn(2 * m, 2 * m, |_, _| rng.random_range(-1.0..=1.0));
    let x = &local.j * (&h + h.transpose());
    let c = linalg::cayley(&(&x * (size / linalg::op_norm(&x).max(f64::MIN_POSITIVE))));
    realize_on_frame(space, &linalg::columns(basis, ranks), &c)
}

/// Vectors spanning `x` normalized to coordinate one on each anchor column
/// of `basis` and zero on the other anchors.
fn anchored(space: &SymplecticSpace, basis: &Mat, anchors: &[usize], x: &Mat) -> Result<Mat> {
    let coords = space.symplectic_inverse(basis) * x;
    let k = linalg::rows(&coords, anchors);
    let ki = linalg::inverse(&k).ok_or_else(|| Error::DegenerateBasis("subspace misses the anchor block".into()))?;
    Ok(x * ki)
}

/// Lands the blocks `layout[level]` and its conjugate `layout[len − 1 − level]`,
/// assuming the outer levels already land. The word runs from `source`
/// to `target`.
pub fn align_level(
    space: &SymplecticSpace,
    word: &TrackedWord,
    source: &OrbitData,
    target: &OrbitData,
    layout: &[Block],
    level: usize,
    opts: &AlignOptions,
) -> Result<(TrackedWord, AlignStep)> {
    check_layout(space, layout)?;
    let nb = layout.len();
    if 2 * level + 1 >= nb + nb.is_multiple_of(2) as usize {
        return Err(Error::Invalid(format!("level {level} leaves no block pair")));
    }
    let d = space.dim();
    let bottom = layout[level];
    let top = layout[nb - 1 - level];
    let bottom_ranks = bottom.ranks();
    let top_ranks = top.ranks();
    let inner: Vec<usize> = (bottom.start..top.end()).collect();
    let s_top = source.block_basis(&top);
    let e_top = target.block_basis(&top);
    let s_bot = source.block_basis(&bottom);
    let e_bot = target.block_basis(&bottom);
    let stage = format!("align level {level}");
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ (level as u64).wrapping_mul(0x9e37_79b9));
    let mut w = word.clone();

    // Generic position: the image of the top source block must project
    // onto the top target block along the other inner blocks.
    let tinv = space.symplectic_inverse(&target.basis);
    let mut nudges = 0;
    loop {
        let x = w.matrix(d) * &s_top;
        let coords = &tinv * &x;
        let k = linalg::rows(&coords, &top_ranks);
        if linalg::min_singular(&k) > 1e-8 * linalg::op_norm(&coords) {
            break;
        }
        if nudges >= opts.retries {
            return Err(Error::stage(&stage, "image of the top block stays in non-generic position"));
        }
        let q = nudge(space, &target.basis, &inner, opts.nudge, &mut rng)?;
        let change = w.compose_last(&q)?;
        check_budget(change, opts, &stage)?;
        nudges += 1;
    }

    // Push forward with the target period map until the landing map is
    // small enough.
    let landing_for = |w: &TrackedWord| -> Result<(Mat, f64)> {
        let x = linalg::orthonormal_basis(&(w.matrix(d) * &s_top), 1e-12);
        let u = anchored(space, &target.basis, &top_ranks, &x)?;
        let lift = multi_transvection(space, &target.basis, &top_ranks, &u)?;
        let landing = space.symplectic_inverse(&lift);
        let last = w.word.letters.last().ok_or_else(|| Error::Invalid("empty word".into()))?;
        let change = linalg::op_norm(&(&landing * last - last));
        Ok((landing, change))
    };
    let mut n_target = 0;
    let (landing, top_angle) = loop {
        let angle = angle_to(&(w.matrix(d) * &s_top), &e_top);
        let (landing, change) = landing_for(&w)?;
        if angle <= opts.theta || opts.budget.is_some_and(|b| change <= b) {
            break (landing, angle);
        }
        if n_target >= opts.cap {
            return Err(Error::IterationCap {
                stage: format!("{stage}: forward push"),
                cap: opts.cap,
                achieved: angle,
            });
        }
        w.push_orbit(target, 1, super::PADDING);
        n_target += 1;
    };
    let landing_change = w.compose_last(&landing)?;
    check_budget(landing_change, opts, &stage)?;

    // Pull the bottom target block back with the source period map.
    let corrector_for = |w: &TrackedWord| -> Result<(Mat, f64, f64)> {
        let y = linalg::orthonormal_basis(&(space.symplectic_inverse(&w.matrix(d)) * &e_bot), 1e-12);
        let angle = angle_to(&y, &s_bot);
        let u = anchored(space, &source.basis, &bottom_ranks, &y)?;
        let corrector = multi_transvection(space, &source.basis, &bottom_ranks, &u)?;
        let first = w.word.letters.first().ok_or_else(|| Error::Invalid("empty word".into()))?;
        let change = linalg::op_norm(&(first * &corrector - first));
        Ok((corrector, change, angle))
    };
    let mut n_source = 0;
    let (corrector, bottom_angle) = loop {
        let (corrector, change, angle) = corrector_for(&w)?;
        if angle <= opts.theta || opts.budget.is_some_and(|b| change <= b) {
            break (corrector, angle);
        }
        if n_source >= opts.cap {
            return Err(Error::IterationCap {
                stage: format!("{stage}: backward pull"),
                cap: opts.cap,
                achieved: angle,
            });
        }
        w.prepend_orbit(source, 1);
        n_source += 1;
    };
    let corrector_change = w.compose_first(&corrector)?;
    check_budget(corrector_change, opts, &stage)?;

    let t = w.matrix(d);
    let mut defect = 0.0_f64;
    for b in [&bottom, &top] {
        defect = defect.max(linalg::containment_defect(&(&t * source.block_basis(b)), &target.block_basis(b)));
    }
    // The symplectic form carries the inner blocks along.
    if bottom.end() < top.start {
        let sv = linalg::columns(&source.basis, &(bottom.end()..top.start).collect::<Vec<_>>());
        let tv = linalg::columns(&target.basis, &(bottom.end()..top.start).collect::<Vec<_>>());
        defect = defect.max(linalg::containment_defect(&(&t * sv), &tv));
    }
    let step = AlignStep {
        level,
        dim: bottom.dim,
        n_target,
        n_source,
        nudges,
        top_angle,
        bottom_angle,
        landing_change,
        corrector_change,
        defect,
    };
    Ok((w, step))
}

/// One alignment level whose outer blocks are planes.
pub fn align_top(
    space: &SymplecticSpace,
    word: &TrackedWord,
    source: &OrbitData,
    target: &OrbitData,
    opts: &AlignOptions,
) -> Result<(TrackedWord, AlignStep)> {
    match target.blocks.last() {
        Some(b) if b.dim == 2 => align_level(space, word, source, target, &target.blocks, 0, opts),
        _ => Err(Error::Hypothesis("top target block is not a plane".into())),
    }
}

/// One alignment level whose outer blocks are lines.
pub fn align_extremes(
    space: &SymplecticSpace,
    word: &TrackedWord,
    source: &OrbitData,
    target: &OrbitData,
    opts: &AlignOptions,
) -> Result<(TrackedWord, AlignStep)> {
    match target.blocks.last() {
        Some(b) if b.dim == 1 => align_level(space, word, source, target, &target.blocks, 0, opts),
        _ => Err(Error::Hypothesis("top target block is not a line".into())),
    }
}

fn align_all(
    space: &SymplecticSpace,
    word: &TrackedWord,
    source: &OrbitData,
    target: &OrbitData,
    layout: &[Block],
    opts: &AlignOptions,
) -> Result<Aligned> {
    let levels = layout.len() / 2;
    let mut w = word.clone();
    let mut steps = Vec::with_capacity(levels);
    for level in 0..levels {
        let (next, step) = align_level(space, &w, source, target, layout, level, opts)?;
        w = next;
        steps.push(step);
    }
    let matrix = w.matrix(space.dim());
    Ok(Aligned { word: w, matrix, steps })
}

/// The pair of transitions `p → p_i` and `p_i → p` mapping the eigenlines
/// of `p` onto the blocks of `p_i` (and back), where the lines of ranks `i`,
/// `i + 1` and their conjugates are grouped into planes. `p` must have
/// simple real spectrum and `p_i` a complex pair at ranks `(i, i + 1)`.
pub fn adapted_transition(
    space: &SymplecticSpace,
    p: &OrbitData,
    pi: &OrbitData,
    i: usize,
    forward: &TrackedWord,
    backward: &TrackedWord,
    opts: &AlignOptions,
) -> Result<(Aligned, Aligned)> {
    if !p.is_real() {
        return Err(Error::Hypothesis(format!("orbit {} has non-real spectrum", p.id())));
    }
    if !pi.blocks.iter().any(|b| b.start + 1 == i && b.dim == 2) {
        return Err(Error::Hypothesis(format!("orbit {} has no complex pair at ranks ({i}, {})", pi.id(), i + 1)));
    }
    let layout = &pi.blocks;
    let fwd = align_all(space, forward, p, pi, layout, opts)?;
    let back = align_all(space, backward, pi, p, layout, opts)?;
    Ok((fwd, back))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocycle::{PeriodicOrbit, TransitionWord};
    use crate::symplectic::rotation;

    fn sp(n: usize) -> SymplecticSpace {
        SymplecticSpace::standard_form(n).unwrap()
    }

    fn conj(s: &SymplecticSpace, m: &Mat, seed: u64, scale: f64) -> Mat {
        let q = s.random_symplectic(&mut ChaCha8Rng::seed_from_u64(seed), scale);
        &q * m * s.symplectic_inverse(&q)
    }

    fn complex_at(s: &SymplecticSpace, rank: usize, seed: u64) -> Mat {
        // Rank 1 pair (modulus 1/2) or rank 3 pair (modulus 2) in dimension 4,
        // rank 2 pair (unit modulus) with lines 1/3, 3.
        let mut m = Mat::zeros(4, 4);
        match rank {
            1 | 3 => {
                m.view_mut((0, 0), (2, 2)).copy_from(&(rotation(0.7) * 2.0));
                m.view_mut((2, 2), (2, 2)).copy_from(&(rotation(-0.7) * 0.5));
            }
            _ => {
                m[(0, 0)] = 3.0;
                m.view_mut((1, 1), (2, 2)).copy_from(&rotation(0.7));
                m[(3, 3)] = 1.0 / 3.0;
            }
        }
        conj(s, &m, seed, 0.3)
    }

    fn budgeted() -> AlignOptions {
        AlignOptions { budget: Some(0.05), ..Default::default() }
    }

    fn data(s: &SymplecticSpace, id: &str, m: Mat) -> OrbitData {
        OrbitData::unperturbed(s, &PeriodicOrbit::new(id, vec![m]).unwrap()).unwrap()
    }

    fn word(from: &str, to: &str, m: Mat) -> TrackedWord {
        TrackedWord::new(TransitionWord::new(from, to, vec![m]))
    }

    #[test]
    fn aligned_input_needs_no_correction() {
        let s = sp(2);
        let p = data(&s, "p", s.diagonal(&[4.0, 2.0]));
        let q = data(&s, "q", s.diagonal(&[5.0, 3.0]));
        let w = word("p", "q", s.identity());
        let (out, step) = align_extremes(&s, &w, &p, &q, &AlignOptions::default()).unwrap();
        assert_eq!((step.n_target, step.n_source, step.nudges), (0, 0, 0));
        assert!(step.landing_change < 1e-14 && step.corrector_change < 1e-14);
        assert!((out.matrix(4) - s.identity()).abs().max() < 1e-14);
    }

    // Orbits sharing a frame, joined by transitions near the identity: the
    // regime where padded words stay well conditioned.
    fn near(s: &SymplecticSpace, seed: u64) -> Mat {
        s.random_symplectic(&mut ChaCha8Rng::seed_from_u64(seed), 0.02)
    }

    #[test]
    fn extremes_land_in_dimension_four() {
        let s = sp(2);
        let p = data(&s, "p", conj(&s, &s.diagonal(&[4.0, 2.0]), 1, 0.3));
        let q = data(&s, "q", conj(&s, &s.diagonal(&[3.0, 1.5]), 1, 0.3));
        let w = word("p", "q", near(&s, 9));
        let (out, step) = align_extremes(&s, &w, &p, &q, &budgeted()).unwrap();
        assert!(step.n_target <= 30 && step.n_source <= 30, "{step:?}");
        assert!(step.defect < 1e-8, "{step:?}");
        let t = out.matrix(4);
        for k in [0, 3] {
            let img = &t * p.column(k);
            assert!(linalg::line_angle(&img, &q.column(k)) < 1e-8);
        }
        for l in &out.word.letters {
            assert!(s.symplectic_residual(l).unwrap() < 1e-10);
        }
    }

    #[test]
    fn top_plane_case() {
        let s = sp(2);
        let p = data(&s, "p", conj(&s, &s.diagonal(&[4.0, 2.0]), 3, 0.3));
        let q = data(&s, "q", complex_at(&s, 3, 3));
        let (f, b) =
            adapted_transition(&s, &p, &q, 3, &word("p", "q", near(&s, 5)), &word("q", "p", near(&s, 6)), &budgeted())
                .unwrap();
        assert_eq!(f.steps.len(), 1);
        assert!(f.defect(&p, &q, &q.blocks) < 1e-8, "{:?}", f.steps);
        assert!(b.defect(&q, &p, &q.blocks) < 1e-8, "{:?}", b.steps);
    }

    #[test]
    fn reduction_then_middle_plane() {
        let s = sp(2);
        let p = data(&s, "p", conj(&s, &s.diagonal(&[4.0, 2.0]), 7, 0.3));
        let q = data(&s, "q", complex_at(&s, 2, 7));
        assert_eq!(q.blocks.len(), 3);
        let (f, b) = adapted_transition(
            &s,
            &p,
            &q,
            2,
            &word("p", "q", near(&s, 10)),
            &word("q", "p", near(&s, 11)),
            &budgeted(),
        )
        .unwrap();
        assert_eq!(f.steps.len(), 1);
        assert!(f.defect(&p, &q, &q.blocks) < 1e-8, "{:?}", f.steps);
        assert!(b.defect(&q, &p, &q.blocks) < 1e-8, "{:?}", b.steps);
    }

    #[test]
    fn bottom_pair_case() {
        let s = sp(2);
        let p = data(&s, "p", conj(&s, &s.diagonal(&[4.0, 2.0]), 12, 0.3));
        let q = data(&s, "q", complex_at(&s, 1, 12));
        let (f, b) = adapted_transition(
            &s,
            &p,
            &q,
            1,
            &word("p", "q", near(&s, 14)),
            &word("q", "p", near(&s, 15)),
            &budgeted(),
        )
        .unwrap();
        assert!(f.defect(&p, &q, &q.blocks) < 1e-8, "{:?}", f.steps);
        assert!(b.defect(&q, &p, &q.blocks) < 1e-8, "{:?}", b.steps);
    }

    #[test]
    fn six_dimensional_lines() {
        let s = sp(3);
        let p = data(&s, "p", conj(&s, &s.diagonal(&[6.0, 3.0, 1.5]), 16, 0.2));
        let q = data(&s, "q", conj(&s, &s.diagonal(&[5.0, 2.5, 1.25]), 16, 0.2));
        let a = align_all(&s, &word("p", "q", near(&s, 18)), &p, &q, &q.blocks, &budgeted()).unwrap();
        assert_eq!(a.steps.len(), 3);
        assert!(a.defect(&p, &q, &q.blocks) < 1e-8, "{:?}", a.steps);
    }

    #[test]
    fn weak_domination_hits_cap() {
        let s = sp(2);
        let p = data(&s, "p", conj(&s, &s.diagonal(&[1.001, 1.0005]), 19, 0.3));
        let q = data(&s, "q", conj(&s, &s.diagonal(&[1.001, 1.0005]), 20, 0.3));
        let w = word("p", "q", s.random_symplectic(&mut ChaCha8Rng::seed_from_u64(21), 0.5));
        let opts = AlignOptions { cap: 20, ..Default::default() };
        assert!(matches!(align_extremes(&s, &w, &p, &q, &opts), Err(Error::IterationCap { .. })));
    }
}
