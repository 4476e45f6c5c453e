//! Periodic symplectic cocycles: orbits carrying words of matrices, plus the
//! JSON file format shared by the whole crate.

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::symplectic::SymplecticSpace;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Letter `k` maps the fiber over point `k` to the fiber over point `k + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicOrbit {
    pub id: String,
    pub letters: Vec<Mat>,
}

/// A word of matrices from point 0 of orbit `from` to point 0 of orbit `to`,
/// applied in order (`letters[0]` first).
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionWord {
    pub from: String,
    pub to: String,
    pub letters: Vec<Mat>,
    pub epsilon: f64,
    pub provenance: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CocycleSystem {
    pub space: SymplecticSpace,
    pub orbits: Vec<PeriodicOrbit>,
    pub bound: f64,
    pub transitions: Vec<TransitionWord>,
    pub designated: Option<String>,
}

/// Defect found while validating a system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LetterIssue {
    pub orbit: String,
    pub letter: usize,
    pub residual: f64,
}

impl PeriodicOrbit {
    pub fn new(id: impl Into<String>, letters: Vec<Mat>) -> Result<Self> {
        if letters.is_empty() {
            return Err(Error::Invalid("orbit needs at least one letter".into()));
        }
        Ok(PeriodicOrbit { id: id.into(), letters })
    }

    pub fn period(&self) -> usize {
        self.letters.len()
    }

    pub fn dim(&self) -> usize {
        self.letters[0].nrows()
    }

    /// Period map `letters[n-1] ⋯ letters[0]`.
    pub fn product(&self) -> Mat {
        linalg::product(self.dim(), &self.letters)
    }

    /// Period map based at point `k`.
    pub fn product_at(&self, k: usize) -> Mat {
        let n = self.period();
        linalg::product(self.dim(), (0..n).map(|s| &self.letters[(k + s) % n]))
    }

    /// Letter-wise inverted, order-reversed orbit.
    pub fn inverse(&self) -> PeriodicOrbit {
        let letters = self.letters.iter().rev().map(|l| l.clone().try_inverse().expect("invertible letter")).collect();
        PeriodicOrbit { id: format!("{}^-1", self.id), letters }
    }

    pub fn point_label(&self, k: usize) -> String {
        format!("{}:{}", self.id, k)
    }
}

impl TransitionWord {
    pub fn new(from: impl Into<String>, to: impl Into<String>, letters: Vec<Mat>) -> Self {
        let provenance = vec!["original".to_string(); letters.len()];
        TransitionWord { from: from.into(), to: to.into(), letters, epsilon: 0.0, provenance }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn matrix(&self, dim: usize) -> Mat {
        linalg::product(dim, &self.letters)
    }
}

/// Product of the letters of `letters`, first letter applied first.
pub fn orbit_product(orbit: &PeriodicOrbit) -> Mat {
    orbit.product()
}

fn letter_norm(orbit: &str, index: usize, m: &Mat) -> Result<f64> {
    let inv = m.clone().try_inverse().ok_or_else(|| Error::SingularLetter { orbit: orbit.to_string(), index })?;
    Ok(linalg::op_norm(m).max(linalg::op_norm(&inv)))
}

impl CocycleSystem {
    pub fn new(space: SymplecticSpace, orbits: Vec<PeriodicOrbit>) -> Result<Self> {
        let mut sys = CocycleSystem { space, orbits, bound: 0.0, transitions: Vec::new(), designated: None };
        sys.check_dims()?;
        sys.bound = sys.system_norm()?;
        Ok(sys)
    }

    pub fn with_transitions(mut self, t: Vec<TransitionWord>) -> Result<Self> {
        self.transitions = t;
        self.check_dims()?;
        Ok(self)
    }

    fn check_dims(&self) -> Result<()> {
        let d = self.space.dim();
        let all = self
            .orbits
            .iter()
            .flat_map(|o| o.letters.iter())
            .chain(self.transitions.iter().flat_map(|t| t.letters.iter()));
        for m in all {
            if m.nrows() != d || m.ncols() != d {
                return Err(Error::DimensionMismatch { expected: d, found: m.nrows() });
            }
        }
        if self.orbits.iter().any(|o| o.letters.is_empty()) {
            return Err(Error::Invalid("orbit needs at least one letter".into()));
        }
        Ok(())
    }

    pub fn orbit(&self, id: &str) -> Result<&PeriodicOrbit> {
        self.orbits.iter().find(|o| o.id == id).ok_or_else(|| Error::UnknownOrbit(id.to_string()))
    }

    /// `sup max(|A|, |A⁻¹|)` over all orbit letters.
    pub fn system_norm(&self) -> Result<f64> {
        if self.orbits.is_empty() {
            return Err(Error::Invalid("empty system".into()));
        }
        let mut k: f64 = 0.0;
        for o in &self.orbits {
            for (i, m) in o.letters.iter().enumerate() {
                k = k.max(letter_norm(&o.id, i, m)?);
            }
        }
        Ok(k)
    }

    /// Letters whose symplecticity residual exceeds the space tolerance,
    /// scaled by the squared letter norm.
    pub fn symplectic_issues(&self) -> Vec<LetterIssue> {
        let mut out = Vec::new();
        let named = self
            .orbits
            .iter()
            .map(|o| (o.id.clone(), &o.letters))
            .chain(self.transitions.iter().map(|t| (format!("{}->{}", t.from, t.to), &t.letters)));
        for (id, letters) in named {
            for (k, m) in letters.iter().enumerate() {
                let r = self.space.symplectic_residual(m).unwrap_or(f64::INFINITY);
                let scale = linalg::op_norm(m).max(1.0).powi(2);
                if r > self.space.tol * scale {
                    out.push(LetterIssue { orbit: id.clone(), letter: k, residual: r });
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(i) = self.symplectic_issues().into_iter().next() {
            return Err(Error::stage(
                "validate",
                format!("letter {} of {} is not symplectic (residual {:.3e})", i.letter, i.orbit, i.residual),
            ));
        }
        let k = self.system_norm()?;
        if k > self.bound * (1.0 + 1e-12) {
            return Err(Error::Invalid(format!("system norm {k} exceeds bound {}", self.bound)));
        }
        Ok(())
    }

    pub fn designated_orbit(&self) -> Result<&PeriodicOrbit> {
        match &self.designated {
            Some(id) => self.orbit(id),
            None => self.orbits.first().ok_or_else(|| Error::Invalid("empty system".into())),
        }
    }

    pub fn transition(&self, from: &str, to: &str) -> Option<&TransitionWord> {
        self.transitions.iter().find(|t| t.from == from && t.to == to)
    }

    pub fn inverse(&self) -> CocycleSystem {
        let orbits: Vec<_> = self.orbits.iter().map(|o| o.inverse()).collect();
        CocycleSystem { orbits, transitions: Vec::new(), ..self.clone() }
    }
}

pub fn system_norm(system: &CocycleSystem) -> Result<f64> {
    system.system_norm()
}

/// Returns `(true, root, k)` when `word = root^k` with `k > 1`, otherwise
/// `(false, word, 1)`. Letters are compared by label.
pub fn is_power<T: PartialEq + Clone>(word: &[T]) -> (bool, Vec<T>, usize) {
    let n = word.len();
    for p in 1..n {
        if n.is_multiple_of(p) && (p..n).all(|i| word[i] == word[i - p]) {
            return (true, word[..p].to_vec(), n / p);
        }
    }
    (false, word.to_vec(), 1)
}

/// Max over positions of the operator norm of the letter difference.
pub fn word_distance(a: &[Mat], b: &[Mat]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    Ok(a.iter().zip(b).map(|(x, y)| linalg::op_norm(&(x - y))).fold(0.0, f64::max))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrbitFile {
    pub id: String,
    pub letters: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransitionFile {
    pub from: String,
    pub to: String,
    pub letters: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub provenance: Vec<String>,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub epsilon: f64,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CocycleFile {
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    pub orbits: Vec<OrbitFile>,
    #[serde(default)]
    pub transitions: Vec<TransitionFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub designated: Option<String>,
}

fn parse_letters(ctx: &str, raw: &[Vec<Vec<f64>>], dim: usize) -> Result<Vec<Mat>> {
    raw.iter()
        .enumerate()
        .map(|(k, rows)| {
            let m = linalg::from_rows(rows).ok_or_else(|| Error::Parse(format!("{ctx}, letter {k}: ragged rows")))?;
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::Parse(format!(
                    "{ctx}, letter {k}: expected {dim}x{dim}, found {}x{}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            if m.iter().any(|x| !x.is_finite()) {
                return Err(Error::Parse(format!("{ctx}, letter {k}: non-finite entry")));
            }
            Ok(m)
        })
        .collect()
}

impl CocycleFile {
    pub fn into_system(self) -> Result<CocycleSystem> {
        if self.dim == 0 || !self.dim.is_multiple_of(2) {
            return Err(Error::Parse(format!("field dim: {} is not a positive even number", self.dim)));
        }
        let space = SymplecticSpace::standard_form(self.dim / 2)?;
        let mut orbits = Vec::new();
        for o in &self.orbits {
            if o.letters.is_empty() {
                return Err(Error::Parse(format!("orbit {}: no letters", o.id)));
            }
            orbits.push(PeriodicOrbit {
                id: o.id.clone(),
                letters: parse_letters(&format!("orbit {}", o.id), &o.letters, self.dim)?,
            });
        }
        let mut transitions = Vec::new();
        for t in &self.transitions {
            let letters = parse_letters(&format!("transition {}->{}", t.from, t.to), &t.letters, self.dim)?;
            let provenance = if t.provenance.len() == letters.len() {
                t.provenance.clone()
            } else {
                vec!["original".to_string(); letters.len()]
            };
            transitions.push(TransitionWord {
                from: t.from.clone(),
                to: t.to.clone(),
                letters,
                epsilon: t.epsilon,
                provenance,
            });
        }
        let mut sys = CocycleSystem { space, orbits, bound: 0.0, transitions, designated: self.designated };
        sys.bound = match self.bound {
            Some(b) => b,
            None => sys.system_norm()?,
        };
        Ok(sys)
    }

    pub fn from_system(sys: &CocycleSystem) -> Self {
        CocycleFile {
            dim: sys.space.dim(),
            bound: Some(sys.bound),
            orbits: sys
                .orbits
                .iter()
                .map(|o| OrbitFile { id: o.id.clone(), letters: o.letters.iter().map(linalg::to_rows).collect() })
                .collect(),
            transitions: sys
                .transitions
                .iter()
                .map(|t| TransitionFile {
                    from: t.from.clone(),
                    to: t.to.clone(),
                    letters: t.letters.iter().map(linalg::to_rows).collect(),
                    provenance: t.provenance.clone(),
                    epsilon: t.epsilon,
                })
                .collect(),
            designated: sys.designated.clone(),
        }
    }
}

impl CocycleSystem {
    pub fn from_json(text: &str) -> Result<Self> {
        let f: CocycleFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        f.into_system()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&CocycleFile::from_system(self)).expect("serializable")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}
