//! Tensor Chebyshev interpolation on Lobatto nodes with derivatives up to
//! second order.

use nalgebra::DMatrix;

/// Lobatto nodes `cos(πj/(n−1))` mapped to `[lo, hi]`, in decreasing order.
pub fn nodes(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|j| to_interval((std::f64::consts::PI * j as f64 / (n - 1) as f64).cos(), lo, hi)).collect()
}

fn to_interval(t: f64, lo: f64, hi: f64) -> f64 {
    0.5 * (lo + hi) + 0.5 * (hi - lo) * t
}

fn to_unit(x: f64, lo: f64, hi: f64) -> f64 {
    (2.0 * x - lo - hi) / (hi - lo)
}

/// Coefficients of the interpolant through values at [`nodes`].
pub fn coefficients(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let m = (n - 1) as f64;
    (0..n)
        .map(|k| {
            let s: f64 = values
                .iter()
                .enumerate()
                .map(|(j, v)| {
                    let w = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
                    w * v * (std::f64::consts::PI * (j * k) as f64 / m).cos()
                })
                .sum();
            let c = 2.0 * s / m;
            if k == 0 || k == n - 1 {
                0.5 * c
            } else {
                c
            }
        })
        .collect()
}

/// `T_k(t)`, `T_k'(t)`, `T_k''(t)` for `k < n`.
pub fn basis(n: usize, t: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut v = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut dd = vec![0.0; n];
    v[0] = 1.0;
    if n > 1 {
        v[1] = t;
        d[1] = 1.0;
    }
    for k in 1..n.saturating_sub(1) {
        v[k + 1] = 2.0 * t * v[k] - v[k - 1];
        d[k + 1] = 2.0 * v[k] + 2.0 * t * d[k] - d[k - 1];
        dd[k + 1] = 4.0 * d[k] + 2.0 * t * dd[k] - dd[k - 1];
    }
    (v, d, dd)
}

/// One-dimensional series on `[lo, hi]`.
#[derive(Debug, Clone)]
pub struct Series {
    pub lo: f64,
    pub hi: f64,
    pub coef: Vec<f64>,
}

impl Series {
    pub fn interpolate(lo: f64, hi: f64, values: &[f64]) -> Self {
        Series { lo, hi, coef: coefficients(values) }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (v, _, _) = basis(self.coef.len(), to_unit(x, self.lo, self.hi));
        self.coef.iter().zip(&v).map(|(c, t)| c * t).sum()
    }

    /// Antiderivative (up to a constant) as a series one degree higher.
    pub fn integral(&self) -> Series {
        let n = self.coef.len();
        let mut out = vec![0.0; n + 1];
        for (k, &a) in self.coef.iter().enumerate() {
            match k {
                0 => out[1] += a,
                1 => out[2] += a / 4.0,
                _ => {
                    out[k + 1] += a / (2.0 * (k + 1) as f64);
                    out[k - 1] -= a / (2.0 * (k - 1) as f64);
                }
            }
        }
        let scale = 0.5 * (self.hi - self.lo);
        Series { lo: self.lo, hi: self.hi, coef: out.into_iter().map(|c| c * scale).collect() }
    }
}

/// Two-dimensional tensor series on `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone)]
pub struct Series2 {
    pub x: (f64, f64),
    pub y: (f64, f64),
    /// `coef[(k, l)]` multiplies `T_k(u) T_l(v)`.
    pub coef: DMatrix<f64>,
}

/// Value, gradient and Hessian of a scalar field of two variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
}

impl Series2 {
    /// `values[(i, j)]` at `(nodes_x[i], nodes_y[j])`.
    pub fn interpolate(x: (f64, f64), y: (f64, f64), values: &DMatrix<f64>) -> Self {
        let (nx, ny) = values.shape();
        let mut rows = DMatrix::zeros(nx, ny);
        for j in 0..ny {
            let col: Vec<f64> = values.column(j).iter().cloned().collect();
            for (k, c) in coefficients(&col).into_iter().enumerate() {
                rows[(k, j)] = c;
            }
        }
        let mut coef = DMatrix::zeros(nx, ny);
        for k in 0..nx {
            let row: Vec<f64> = rows.row(k).iter().cloned().collect();
            for (l, c) in coefficients(&row).into_iter().enumerate() {
                coef[(k, l)] = c;
            }
        }
        Series2 { x, y, coef }
    }

    pub fn contains(&self, p: [f64; 2], slack: f64) -> bool {
        let inside = |v: f64, (lo, hi): (f64, f64)| v >= lo - slack * (hi - lo) && v <= hi + slack * (hi - lo);
        inside(p[0], self.x) && inside(p[1], self.y)
    }

    pub fn jet(&self, p: [f64; 2]) -> Jet2 {
        let (nx, ny) = self.coef.shape();
        let (bu, du, ddu) = basis(nx, to_unit(p[0], self.x.0, self.x.1));
        let (bv, dv, ddv) = basis(ny, to_unit(p[1], self.y.0, self.y.1));
        let sx = 2.0 / (self.x.1 - self.x.0);
        let sy = 2.0 / (self.y.1 - self.y.0);
        let mut acc = [0.0; 6];
        for k in 0..nx {
            let mut r = [0.0; 3];
            for l in 0..ny {
                let c = self.coef[(k, l)];
                r[0] += c * bv[l];
                r[1] += c * dv[l];
                r[2] += c * ddv[l];
            }
            acc[0] += bu[k] * r[0];
            acc[1] += du[k] * r[0];
            acc[2] += bu[k] * r[1];
            acc[3] += ddu[k] * r[0];
            acc[4] += du[k] * r[1];
            acc[5] += bu[k] * r[2];
        }
        Jet2 {
            value: acc[0],
            grad: [acc[1] * sx, acc[2] * sy],
            hess: [[acc[3] * sx * sx, acc[4] * sx * sy], [acc[4] * sx * sy, acc[5] * sy * sy]],
        }
    }
}
