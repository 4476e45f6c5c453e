//! Blending a generating function into `S_id = x η` with a plateau profile.

use super::chebyshev::Jet2;
use super::generating::{map_from_generating, GeneratedMap, GeneratingFunction};
use super::maps::{LocalMap, Point};
use crate::error::{Error, Result};
use crate::par;
use serde::Serialize;
use std::sync::Arc;

/// Smallest `|∂²S_g/∂x∂η|` accepted on the outer ball.
pub const MIN_MIXED: f64 = 0.1;

/// `h(q) = 1/(1 + e^q)` with its first two derivatives.
fn logistic(q: f64) -> (f64, f64, f64) {
    let h = 1.0 / (1.0 + q.exp());
    let d = -h * (1.0 - h);
    (h, d, d * (2.0 * h - 1.0))
}

/// Smooth step equal to 0 for `s ≤ 0` and 1 for `s ≥ 1`, built from
/// `e^{−1/t}`; returns value and two derivatives.
pub fn smooth_step(s: f64) -> (f64, f64, f64) {
    if s <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if s >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let u = 1.0 - s;
    let q = 1.0 / s - 1.0 / u;
    let dq = -1.0 / (s * s) - 1.0 / (u * u);
    let ddq = 2.0 / (s * s * s) - 2.0 / (u * u * u);
    let (h, dh, ddh) = logistic(q);
    (h, dh * dq, ddh * dq * dq + dh * ddq)
}

/// Radial profile about `center` in the `(x, η)` chart: 1 on the inner
/// disc, 0 outside the outer disc.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BumpProfile {
    pub inner: f64,
    pub outer: f64,
    pub center: [f64; 2],
}

impl BumpProfile {
    pub fn new(inner: f64, outer: f64, center: [f64; 2]) -> Result<Self> {
        if !(inner > 0.0 && outer > inner) {
            return Err(Error::Invalid(format!("bump radii must satisfy 0 < inner < outer, got {inner}, {outer}")));
        }
        Ok(BumpProfile { inner, outer, center })
    }

    /// Radii `(β/2, β)`.
    pub fn standard(beta: f64, center: [f64; 2]) -> Result<Self> {
        Self::new(beta / 2.0, beta, center)
    }

    /// Radii `(β/3, β/2)`.
    pub fn narrow(beta: f64, center: [f64; 2]) -> Result<Self> {
        Self::new(beta / 3.0, beta / 2.0, center)
    }

    pub fn radius(&self, p: [f64; 2]) -> f64 {
        (p[0] - self.center[0]).hypot(p[1] - self.center[1])
    }

    pub fn jet(&self, p: [f64; 2]) -> Jet2 {
        let d = [p[0] - self.center[0], p[1] - self.center[1]];
        let r = d[0].hypot(d[1]);
        let w = self.outer - self.inner;
        let (st, dst, ddst) = smooth_step((r - self.inner) / w);
        if dst == 0.0 && ddst == 0.0 {
            return Jet2 { value: 1.0 - st, grad: [0.0; 2], hess: [[0.0; 2]; 2] };
        }
        let dr = [d[0] / r, d[1] / r];
        let (d1, d2) = (-dst / w, -ddst / (w * w));
        let mut hess = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                let delta = if a == b { 1.0 } else { 0.0 };
                hess[a][b] = d2 * dr[a] * dr[b] + d1 * (delta - dr[a] * dr[b]) / r;
            }
        }
        Jet2 { value: 1.0 - st, grad: [d1 * dr[0], d1 * dr[1]], hess }
    }
}

/// `S_g = ρ S_id + (1 − ρ) S_f`.
#[derive(Clone)]
pub struct Glued {
    pub f: Arc<dyn GeneratingFunction>,
    pub profile: BumpProfile,
}

impl GeneratingFunction for Glued {
    fn jet(&self, p: [f64; 2]) -> Jet2 {
        let sf = self.f.jet(p);
        let rho = self.profile.jet(p);
        if rho.value == 0.0 && rho.grad == [0.0; 2] {
            return sf;
        }
        let [x, e] = p;
        let d = Jet2 {
            value: x * e - sf.value,
            grad: [e - sf.grad[0], x - sf.grad[1]],
            hess: [[-sf.hess[0][0], 1.0 - sf.hess[0][1]], [1.0 - sf.hess[1][0], -sf.hess[1][1]]],
        };
        let mut hess = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                hess[a][b] = sf.hess[a][b]
                    + rho.value * d.hess[a][b]
                    + rho.grad[a] * d.grad[b]
                    + d.grad[a] * rho.grad[b]
                    + d.value * rho.hess[a][b];
            }
        }
        Jet2 {
            value: sf.value + rho.value * d.value,
            grad: [
                sf.grad[0] + rho.value * d.grad[0] + d.value * rho.grad[0],
                sf.grad[1] + rho.value * d.grad[1] + d.value * rho.grad[1],
            ],
            hess,
        }
    }

    fn base(&self) -> [f64; 2] {
        self.f.base()
    }

    fn chart(&self) -> Option<super::generating::Chart> {
        self.f.chart()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GlueReport {
    pub profile: BumpProfile,
    /// Smallest `|∂²S_g/∂x∂η|` over the outer disc.
    pub min_mixed: f64,
    /// `‖S_g − S_f‖_{C²}` over the outer disc.
    pub c2_gap: f64,
    /// `‖S_f − S_id‖_{C²}` over the outer disc.
    pub c2_from_identity: f64,
    /// Measured ratio of the two norms.
    pub k_factor: f64,
}

pub struct GlueResult {
    pub s: Arc<Glued>,
    pub map: GeneratedMap,
    pub report: GlueReport,
}

/// Where a chart point sits relative to a profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Region {
    Inner,
    Collar,
    Outer,
}

pub fn region(profile: &BumpProfile, p: [f64; 2]) -> Region {
    let r = profile.radius(p);
    if r <= profile.inner {
        Region::Inner
    } else if r >= profile.outer {
        Region::Outer
    } else {
        Region::Collar
    }
}

fn c2_norm(jets: &[Jet2]) -> f64 {
    let (mut v, mut g, mut h) = (0.0f64, 0.0f64, 0.0f64);
    for j in jets {
        v = v.max(j.value.abs());
        g = g.max(j.grad[0].hypot(j.grad[1]));
        h = h.max(j.hess.iter().flatten().fold(0.0, |m, x| m.max(x.abs())));
    }
    v + g + h
}

fn diff(a: &Jet2, b: &Jet2) -> Jet2 {
    let mut hess = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            hess[i][j] = a.hess[i][j] - b.hess[i][j];
        }
    }
    Jet2 { value: a.value - b.value, grad: [a.grad[0] - b.grad[0], a.grad[1] - b.grad[1]], hess }
}

/// Samples of the closed outer disc on a polar grid.
fn disc_samples(profile: &BumpProfile, rings: usize) -> Vec<[f64; 2]> {
    let mut out = vec![profile.center];
    for a in 1..=rings {
        let r = profile.outer * a as f64 / rings as f64;
        let m = 8 * a;
        for b in 0..m {
            let t = std::f64::consts::TAU * b as f64 / m as f64;
            out.push([profile.center[0] + r * t.cos(), profile.center[1] + r * t.sin()]);
        }
    }
    out
}

/// Glues `S_f` to the identity and checks the mixed derivative on the
/// outer disc.
pub fn glue_to_identity(s_f: Arc<dyn GeneratingFunction>, profile: BumpProfile) -> Result<GlueResult> {
    if let Some(c) = s_f.chart() {
        let [cx, ce] = profile.center;
        let o = profile.outer;
        if !(c.contains([cx - o, ce - o], 0.0) && c.contains([cx + o, ce + o], 0.0)) {
            return Err(Error::Invalid("outer disc of the bump profile leaves the generating-function chart".into()));
        }
    }
    let glued = Arc::new(Glued { f: s_f.clone(), profile });
    let samples = disc_samples(&profile, 48);
    let jets: Vec<(Jet2, Jet2)> = par::map(&samples, |p| (glued.jet(*p), s_f.jet(*p)));

    let mut min_mixed = f64::INFINITY;
    let mut worst = profile.center;
    for (p, (g, _)) in samples.iter().zip(&jets) {
        if g.hess[0][1].abs() < min_mixed {
            min_mixed = g.hess[0][1].abs();
            worst = *p;
        }
    }
    if min_mixed < MIN_MIXED {
        return Err(Error::stage(
            "glue",
            format!(
                "mixed derivative {min_mixed:.3e} at chart point ({:.6}, {:.6}); map too far from the identity",
                worst[0], worst[1]
            ),
        ));
    }

    let gap: Vec<Jet2> = jets.iter().map(|(g, f)| diff(g, f)).collect();
    let from_id: Vec<Jet2> = samples
        .iter()
        .zip(&jets)
        .map(|(p, (_, f))| {
            let id = Jet2 { value: p[0] * p[1], grad: [p[1], p[0]], hess: [[0.0, 1.0], [1.0, 0.0]] };
            diff(f, &id)
        })
        .collect();
    let c2_gap = c2_norm(&gap);
    let c2_from_identity = c2_norm(&from_id);
    let k_factor = if c2_from_identity > 0.0 { c2_gap / c2_from_identity } else { 0.0 };
    let map = map_from_generating(glued.clone());
    Ok(GlueResult { s: glued, map, report: GlueReport { profile, min_mixed, c2_gap, c2_from_identity, k_factor } })
}

/// Square sampling domain `[x0, x1] × [y0, y1]` in `(x, y)` coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub x: (f64, f64),
    pub y: (f64, f64),
}

impl Domain {
    pub fn square(r: f64) -> Self {
        Domain { x: (-r, r), y: (-r, r) }
    }

    pub fn grid(&self, n: usize) -> Vec<Point> {
        let at = |(lo, hi): (f64, f64), i: usize| {
            if n < 2 {
                0.5 * (lo + hi)
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        };
        (0..n).flat_map(|i| (0..n).map(move |j| Point::new(at(self.x, i), at(self.y, j)))).collect()
    }
}

fn op_norm2(m: &nalgebra::Matrix2<f64>) -> f64 {
    let f2 = m.norm_squared();
    let det = m.determinant();
    ((f2 + (f2 * f2 - 4.0 * det * det).max(0.0).sqrt()) / 2.0).sqrt()
}

/// Largest value distance plus largest Jacobian operator-norm distance over
/// an `n × n` grid.
pub fn c1_distance(f: &dyn LocalMap, g: &dyn LocalMap, domain: &Domain, n: usize) -> Result<f64> {
    if n == 0 || !(domain.x.1 >= domain.x.0 && domain.y.1 >= domain.y.0) {
        return Err(Error::Invalid("c1_distance needs a non-empty domain".into()));
    }
    let pts = domain.grid(n);
    let per: Vec<Result<(f64, f64)>> = par::map(&pts, |z| {
        let (fv, fj) = f.jet(*z)?;
        let (gv, gj) = g.jet(*z)?;
        Ok(((fv - gv).norm(), op_norm2(&(fj - gj))))
    });
    let mut v = 0.0f64;
    let mut j = 0.0f64;
    for r in per {
        let (a, b) = r?;
        v = v.max(a);
        j = j.max(b);
    }
    Ok(v + j)
}
