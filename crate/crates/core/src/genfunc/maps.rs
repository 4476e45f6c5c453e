//! Local symplectic maps of the plane, `(x, y) ↦ (ξ, η)`.

use crate::error::{Error, Result};
use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

pub type Point = Vector2<f64>;
pub type Jac = Matrix2<f64>;

pub trait LocalMap: Send + Sync {
    fn eval(&self, z: Point) -> Result<Point>;
    /// Rows `(ξ, η)`, columns `(x, y)`.
    fn jacobian(&self, z: Point) -> Result<Jac>;

    fn jet(&self, z: Point) -> Result<(Point, Jac)> {
        Ok((self.eval(z)?, self.jacobian(z)?))
    }
}

/// `|det Df − 1|`, the symplecticity defect of a planar Jacobian.
pub fn symplectic_defect(j: &Jac) -> f64 {
    (j.determinant() - 1.0).abs()
}

#[derive(Debug, Clone, PartialEq)]
pub enum BuiltinMap {
    Identity,
    /// A constant symplectic matrix.
    Linear(Jac),
    /// `η = y + k sin x`, `ξ = x + η`.
    Standard {
        k: f64,
    },
    /// `diag(a, 1/a)` after the shear `y ↦ y + k x²`.
    Quadratic {
        a: f64,
        k: f64,
    },
}

impl BuiltinMap {
    pub fn diagonal(a: f64) -> Self {
        BuiltinMap::Linear(Jac::new(a, 0.0, 0.0, 1.0 / a))
    }

    /// Parses `identity`, `linear:a`, `standard:k` or `quadratic:a,k`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (name, args) = spec.split_once(':').unwrap_or((spec, ""));
        let nums: Vec<f64> = if args.is_empty() {
            Vec::new()
        } else {
            args.split(',')
                .map(|a| a.trim().parse::<f64>().map_err(|e| Error::Parse(format!("map parameter {a:?}: {e}"))))
                .collect::<Result<_>>()?
        };
        let want = |n: usize| {
            if nums.len() == n {
                Ok(())
            } else {
                Err(Error::Parse(format!("map {name} takes {n} parameter(s), got {}", nums.len())))
            }
        };
        match name {
            "identity" => want(0).map(|_| BuiltinMap::Identity),
            "linear" => {
                want(1)?;
                if nums[0] <= 0.0 {
                    return Err(Error::Parse("linear map needs a positive parameter".into()));
                }
                Ok(BuiltinMap::diagonal(nums[0]))
            }
            "standard" => want(1).map(|_| BuiltinMap::Standard { k: nums[0] }),
            "quadratic" => {
                want(2)?;
                if nums[0] <= 0.0 {
                    return Err(Error::Parse("quadratic map needs a positive dilation".into()));
                }
                Ok(BuiltinMap::Quadratic { a: nums[0], k: nums[1] })
            }
            _ => Err(Error::Parse(format!("unknown map {name:?}"))),
        }
    }
}

impl LocalMap for BuiltinMap {
    fn eval(&self, z: Point) -> Result<Point> {
        let (x, y) = (z[0], z[1]);
        Ok(match self {
            BuiltinMap::Identity => z,
            BuiltinMap::Linear(m) => m * z,
            BuiltinMap::Standard { k } => {
                let eta = y + k * x.sin();
                Point::new(x + eta, eta)
            }
            BuiltinMap::Quadratic { a, k } => Point::new(a * x, (y + k * x * x) / a),
        })
    }

    fn jacobian(&self, z: Point) -> Result<Jac> {
        let x = z[0];
        Ok(match self {
            BuiltinMap::Identity => Jac::identity(),
            BuiltinMap::Linear(m) => *m,
            BuiltinMap::Standard { k } => {
                let c = k * x.cos();
                Jac::new(1.0 + c, 1.0, c, 1.0)
            }
            BuiltinMap::Quadratic { a, k } => Jac::new(*a, 0.0, 2.0 * k * x / a, 1.0 / a),
        })
    }
}

/// Polynomial map `ξ = Σ c x^i y^j`, `η = Σ c x^i y^j`, read from JSON as
/// lists of `[i, j, c]` terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyMap {
    pub xi: Vec<(u32, u32, f64)>,
    pub eta: Vec<(u32, u32, f64)>,
}

fn poly(terms: &[(u32, u32, f64)], x: f64, y: f64) -> (f64, f64, f64) {
    let mut v = 0.0;
    let mut dx = 0.0;
    let mut dy = 0.0;
    for &(i, j, c) in terms {
        let (i, j) = (i as i32, j as i32);
        v += c * x.powi(i) * y.powi(j);
        if i > 0 {
            dx += c * i as f64 * x.powi(i - 1) * y.powi(j);
        }
        if j > 0 {
            dy += c * j as f64 * x.powi(i) * y.powi(j - 1);
        }
    }
    (v, dx, dy)
}

impl PolyMap {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("polynomial map: {e}")))
    }
}

impl LocalMap for PolyMap {
    fn eval(&self, z: Point) -> Result<Point> {
        Ok(Point::new(poly(&self.xi, z[0], z[1]).0, poly(&self.eta, z[0], z[1]).0))
    }

    fn jacobian(&self, z: Point) -> Result<Jac> {
        let (_, a, b) = poly(&self.xi, z[0], z[1]);
        let (_, c, d) = poly(&self.eta, z[0], z[1]);
        Ok(Jac::new(a, b, c, d))
    }
}
