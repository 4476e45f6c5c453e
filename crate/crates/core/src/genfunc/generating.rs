//! Generating functions `S(x, η)` with `S_x = y`, `S_η = ξ`, and the maps
//! they generate.

use super::chebyshev::{nodes, Jet2, Series, Series2};
use super::maps::{Jac, LocalMap, Point};
use crate::error::{Error, Result};
use crate::par;
use nalgebra::DMatrix;
use std::sync::Arc;

/// Newton tolerance and iteration cap for the implicit equations.
pub const NEWTON_TOL: f64 = 1e-12;
pub const NEWTON_ITERS: usize = 50;
/// Smallest admissible `|∂η/∂y|` during reconstruction.
pub const MIN_ETA_Y: f64 = 1e-8;

/// Rectangle in the `(x, η)` chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chart {
    pub x: (f64, f64),
    pub eta: (f64, f64),
}

impl Chart {
    pub fn centered(eta0: f64, radius: f64) -> Self {
        Chart { x: (-radius, radius), eta: (eta0 - radius, eta0 + radius) }
    }

    pub fn contains(&self, p: [f64; 2], slack: f64) -> bool {
        let inside = |v: f64, (lo, hi): (f64, f64)| v >= lo - slack && v <= hi + slack;
        inside(p[0], self.x) && inside(p[1], self.eta)
    }
}

pub trait GeneratingFunction: Send + Sync {
    /// Value, `(S_x, S_η)` and Hessian at `(x, η)`.
    fn jet(&self, p: [f64; 2]) -> Jet2;
    /// Chart point `(0, η(0, 0))` where `S` vanishes.
    fn base(&self) -> [f64; 2];
    /// Region where the function is defined, `None` for closed forms.
    fn chart(&self) -> Option<Chart> {
        None
    }
}

impl<T: GeneratingFunction + ?Sized> GeneratingFunction for Arc<T> {
    fn jet(&self, p: [f64; 2]) -> Jet2 {
        (**self).jet(p)
    }
    fn base(&self) -> [f64; 2] {
        (**self).base()
    }
    fn chart(&self) -> Option<Chart> {
        (**self).chart()
    }
}

/// Generating functions known in closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClosedForm {
    /// `x η`.
    Identity,
    /// `a x η`, generating `diag(a, 1/a)`.
    Linear(f64),
    /// `a x η − k x³/3`, generating the quadratic built-in.
    Quadratic { a: f64, k: f64 },
    /// `x η + η²/2 + k cos x − k`, generating the standard map.
    Standard { k: f64 },
}

impl GeneratingFunction for ClosedForm {
    fn jet(&self, p: [f64; 2]) -> Jet2 {
        let [x, e] = p;
        match *self {
            ClosedForm::Identity => ClosedForm::Linear(1.0).jet(p),
            ClosedForm::Linear(a) => Jet2 { value: a * x * e, grad: [a * e, a * x], hess: [[0.0, a], [a, 0.0]] },
            ClosedForm::Quadratic { a, k } => Jet2 {
                value: a * x * e - k * x * x * x / 3.0,
                grad: [a * e - k * x * x, a * x],
                hess: [[-2.0 * k * x, a], [a, 0.0]],
            },
            ClosedForm::Standard { k } => Jet2 {
                value: x * e + 0.5 * e * e + k * x.cos() - k,
                grad: [e - k * x.sin(), x + e],
                hess: [[-k * x.cos(), 1.0], [1.0, 1.0]],
            },
        }
    }

    fn base(&self) -> [f64; 2] {
        [0.0, 0.0]
    }
}

/// `S` sampled on a Chebyshev–Lobatto tensor grid.
#[derive(Debug, Clone)]
pub struct ChebyshevGenerating {
    pub series: Series2,
    pub base: [f64; 2],
    /// Largest of `|S_x − y|` and `|S_η − ξ|` over the nodes.
    pub identity_residual: f64,
    /// Largest `|∂y/∂η − ∂ξ/∂x|` in the chart over the nodes.
    pub closedness_residual: f64,
}

impl GeneratingFunction for ChebyshevGenerating {
    fn jet(&self, p: [f64; 2]) -> Jet2 {
        self.series.jet(p)
    }
    fn base(&self) -> [f64; 2] {
        self.base
    }
    fn chart(&self) -> Option<Chart> {
        Some(Chart { x: self.series.x, eta: self.series.y })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenOptions {
    /// Half-width of the chart square around `(0, η(0, 0))`.
    pub radius: f64,
    /// Nodes per axis.
    pub grid: usize,
    /// Closedness tolerance; larger residuals mean the map is not symplectic.
    pub tol: f64,
}

impl Default for GenOptions {
    fn default() -> Self {
        GenOptions { radius: 0.5, grid: 64, tol: 1e-8 }
    }
}

/// Solves `η(x, y) = eta` for `y`.
fn solve_y(f: &dyn LocalMap, x: f64, eta: f64) -> Result<(f64, Point, Jac)> {
    let mut y = eta;
    for _ in 0..NEWTON_ITERS {
        let (v, j) = f.jet(Point::new(x, y))?;
        let r = v[1] - eta;
        if j[(1, 1)].abs() < MIN_ETA_Y {
            return Err(Error::stage("generating", format!("∂η/∂y is singular at ({x:.6}, {y:.6})")));
        }
        if r.abs() <= NEWTON_TOL {
            return Ok((y, v, j));
        }
        y -= r / j[(1, 1)];
    }
    let r = f.eval(Point::new(x, y))?[1] - eta;
    Err(Error::NewtonFailure { point: vec![x, eta], residual: r.abs() })
}

/// Reconstructs `S` by integrating `y dx + ξ dη` from the base point along
/// the path `(0, η₀) → (x, η₀) → (x, η)`.
pub fn generating_from_map(f: &dyn LocalMap, opts: &GenOptions) -> Result<ChebyshevGenerating> {
    if opts.grid < 4 || !(opts.radius > 0.0) {
        return Err(Error::Invalid("generating grid needs at least 4 nodes and a positive radius".into()));
    }
    let n = opts.grid;
    let eta0 = f.eval(Point::zeros())?[1];
    let chart = Chart::centered(eta0, opts.radius);
    let xs = nodes(n, chart.x.0, chart.x.1);
    let es = nodes(n, chart.eta.0, chart.eta.1);

    struct Sample {
        y: f64,
        xi: f64,
        closed: f64,
    }
    let columns: Vec<Result<(Vec<Sample>, f64)>> = par::map_range(n, |i| {
        let samples = es
            .iter()
            .map(|&e| {
                let (y, v, j) = solve_y(f, xs[i], e)?;
                let (xx, xy, ex, ey) = (j[(0, 0)], j[(0, 1)], j[(1, 0)], j[(1, 1)]);
                let closed = (1.0 / ey - (xx - xy * ex / ey)).abs();
                Ok(Sample { y, xi: v[0], closed })
            })
            .collect::<Result<Vec<_>>>()?;
        let y_base = solve_y(f, xs[i], eta0)?.0;
        Ok((samples, y_base))
    });
    let columns = columns.into_iter().collect::<Result<Vec<_>>>()?;

    let closedness = columns.iter().flat_map(|(c, _)| c.iter().map(|s| s.closed)).fold(0.0, f64::max);
    if closedness > opts.tol {
        return Err(Error::NotSymplectic { residual: closedness });
    }

    let y_base: Vec<f64> = columns.iter().map(|(_, y)| *y).collect();
    let along_x = Series::interpolate(chart.x.0, chart.x.1, &y_base).integral();
    let x_part: Vec<f64> = xs.iter().map(|&x| along_x.eval(x) - along_x.eval(0.0)).collect();
    let mut values = DMatrix::zeros(n, n);
    for (i, (samples, _)) in columns.iter().enumerate() {
        let xi: Vec<f64> = samples.iter().map(|s| s.xi).collect();
        let along_eta = Series::interpolate(chart.eta.0, chart.eta.1, &xi).integral();
        let start = along_eta.eval(eta0);
        for (j, &e) in es.iter().enumerate() {
            values[(i, j)] = x_part[i] + along_eta.eval(e) - start;
        }
    }
    let series = Series2::interpolate(chart.x, chart.eta, &values);

    let mut identity = 0.0f64;
    for (i, (samples, _)) in columns.iter().enumerate() {
        for (j, s) in samples.iter().enumerate() {
            let jet = series.jet([xs[i], es[j]]);
            identity = identity.max((jet.grad[0] - s.y).abs()).max((jet.grad[1] - s.xi).abs());
        }
    }
    Ok(ChebyshevGenerating { series, base: [0.0, eta0], identity_residual: identity, closedness_residual: closedness })
}

/// Map generated by `S`: `y = S_x(x, η)` solved for `η`, then `ξ = S_η`.
#[derive(Clone)]
pub struct GeneratedMap {
    pub s: Arc<dyn GeneratingFunction>,
}

pub fn map_from_generating(s: Arc<dyn GeneratingFunction>) -> GeneratedMap {
    GeneratedMap { s }
}

impl GeneratedMap {
    /// The chart point `(x, η)` of `(x, y)` together with the jet of `S` there.
    pub fn chart_point(&self, z: Point) -> Result<([f64; 2], Jet2)> {
        let (x, y) = (z[0], z[1]);
        let mut eta = y;
        let mut jet = self.s.jet([x, eta]);
        let mut r = jet.grad[0] - y;
        let mut iters = 0;
        while r.abs() > NEWTON_TOL {
            if iters == NEWTON_ITERS || jet.hess[0][1].abs() < MIN_ETA_Y {
                return Err(Error::NewtonFailure { point: vec![x, y], residual: r.abs() });
            }
            iters += 1;
            let step = r / jet.hess[0][1];
            let mut t = 1.0;
            loop {
                let trial = self.s.jet([x, eta - t * step]);
                let rt = trial.grad[0] - y;
                if rt.abs() < r.abs() || t < 1e-6 {
                    eta -= t * step;
                    jet = trial;
                    r = rt;
                    break;
                }
                t *= 0.5;
            }
        }
        if let Some(c) = self.s.chart() {
            if !c.contains([x, eta], 1e-9) {
                return Err(Error::Invalid(format!("({x:.6}, {eta:.6}) lies outside the generating-function chart")));
            }
        }
        Ok(([x, eta], jet))
    }
}

impl LocalMap for GeneratedMap {
    fn eval(&self, z: Point) -> Result<Point> {
        let ([_, eta], jet) = self.chart_point(z)?;
        Ok(Point::new(jet.grad[1], eta))
    }

    fn jacobian(&self, z: Point) -> Result<Jac> {
        Ok(self.jet(z)?.1)
    }

    fn jet(&self, z: Point) -> Result<(Point, Jac)> {
        let ([_, eta], jet) = self.chart_point(z)?;
        let [[sxx, sxe], [_, see]] = jet.hess;
        let eta_y = 1.0 / sxe;
        let eta_x = -sxx / sxe;
        let j = Jac::new(sxe + see * eta_x, see * eta_y, eta_x, eta_y);
        Ok((Point::new(jet.grad[1], eta), j))
    }
}

/// CSV rows `x,eta,S,S_x,S_eta` on an `n × n` grid over `chart`.
pub fn grid_csv(s: &dyn GeneratingFunction, chart: &Chart, n: usize) -> String {
    let mut out = String::from("x,eta,S,S_x,S_eta\n");
    let step = |(lo, hi): (f64, f64), i: usize| {
        if n < 2 {
            0.5 * (lo + hi)
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    };
    for i in 0..n {
        for j in 0..n {
            let p = [step(chart.x, i), step(chart.eta, j)];
            let jet = s.jet(p);
            out.push_str(&format!("{},{},{},{},{}\n", p[0], p[1], jet.value, jet.grad[0], jet.grad[1]));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genfunc::maps::{symplectic_defect, BuiltinMap};

    fn grid_points(r: f64, n: usize) -> impl Iterator<Item = Point> {
        (0..n).flat_map(move |i| {
            (0..n).map(move |j| {
                Point::new(-r + 2.0 * r * i as f64 / (n - 1) as f64, -r + 2.0 * r * j as f64 / (n - 1) as f64)
            })
        })
    }

    #[test]
    fn identity_and_linear_closed_forms() {
        for (map, a) in
            [(BuiltinMap::Identity, 1.0), (BuiltinMap::diagonal(1.7), 1.7), (BuiltinMap::diagonal(0.6), 0.6)]
        {
            let s = generating_from_map(&map, &GenOptions { grid: 16, ..Default::default() }).unwrap();
            for p in [[0.1, -0.2], [-0.45, 0.3], [0.0, 0.0]] {
                assert!((s.jet(p).value - a * p[0] * p[1]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn standard_map_matches_closed_form() {
        let k = 0.1;
        let s = generating_from_map(&BuiltinMap::Standard { k }, &GenOptions::default()).unwrap();
        assert!(s.identity_residual < 1e-10 && s.closedness_residual < 1e-10);
        for p in [[0.2f64, 0.1], [-0.4, -0.3]] {
            let (x, e) = (p[0], p[1]);
            let exact = x * e + 0.5 * e * e + k * x.cos() - k;
            assert!((s.jet(p).value - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn generated_maps_reproduce_builtins() {
        let cases = [
            (ClosedForm::Identity, BuiltinMap::Identity),
            (ClosedForm::Linear(1.3), BuiltinMap::diagonal(1.3)),
            (ClosedForm::Standard { k: 0.2 }, BuiltinMap::Standard { k: 0.2 }),
            (ClosedForm::Quadratic { a: 1.01, k: 0.3 }, BuiltinMap::Quadratic { a: 1.01, k: 0.3 }),
        ];
        for (s, f) in cases {
            let g = map_from_generating(Arc::new(s));
            for z in grid_points(0.3, 7) {
                let (v, j) = g.jet(z).unwrap();
                assert!((v - f.eval(z).unwrap()).norm() < 1e-12, "{s:?} at {z}");
                assert!((j - f.jacobian(z).unwrap()).norm() < 1e-12);
                assert!(symplectic_defect(&j) < 1e-14);
            }
        }
    }

    #[test]
    fn rejects_non_symplectic_input() {
        let f = BuiltinMap::Linear(Jac::new(1.2, 0.0, 0.0, 1.0));
        assert!(matches!(generating_from_map(&f, &GenOptions::default()), Err(Error::NotSymplectic { .. })));
    }

    #[test]
    fn rejects_degenerate_shear() {
        // η does not depend on y.
        let f = BuiltinMap::Linear(Jac::new(0.0, 1.0, -1.0, 0.0));
        assert!(generating_from_map(&f, &GenOptions { grid: 8, ..Default::default() }).is_err());
    }

    #[test]
    fn newton_reports_failing_point() {
        // y = η² + 1 has no solution for y = 0.
        struct Flat;
        impl GeneratingFunction for Flat {
            fn jet(&self, p: [f64; 2]) -> Jet2 {
                let (x, e) = (p[0], p[1]);
                Jet2 {
                    value: x * (e * e + 1.0),
                    grad: [e * e + 1.0, 2.0 * x * e],
                    hess: [[0.0, 2.0 * e], [2.0 * e, 2.0 * x]],
                }
            }
            fn base(&self) -> [f64; 2] {
                [0.0, 0.0]
            }
        }
        let g = map_from_generating(Arc::new(Flat));
        match g.eval(Point::new(0.1, 0.0)) {
            Err(Error::NewtonFailure { point, .. }) => assert_eq!(point, vec![0.1, 0.0]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn csv_header_and_rows() {
        let csv = grid_csv(&ClosedForm::Identity, &Chart::centered(0.0, 1.0), 3);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 10);
        assert_eq!(lines[0], "x,eta,S,S_x,S_eta");
        assert_eq!(lines[1], "-1,-1,1,-1,-1");
    }
}
