use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("half dimension must be at least 1")]
    ZeroDimension,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("degenerate basis: {0}")]
    DegenerateBasis(String),

    #[error("matrix is not symplectic (residual {residual:.3e})")]
    NotSymplectic { residual: f64 },

    #[error("unpaired eigenvalue {value} (best inverse residual {residual:.3e})")]
    UnpairedEigenvalue { value: String, residual: f64 },

    #[error("complex spectrum: no real eigenbasis")]
    ComplexSpectrum,

    #[error("eigenvalue gap {found:.3e} below required {required:.3e}")]
    GapViolation { found: f64, required: f64 },

    #[error("singular letter in orbit {orbit} at position {index}")]
    SingularLetter { orbit: String, index: usize },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("splitting is not invariant (defect {defect:.3e} at orbit {orbit}, point {point})")]
    NotInvariant { orbit: String, point: usize, defect: f64 },

    #[error("subspaces are not complementary")]
    NotComplementary,

    #[error("hypothesis failed: {0}")]
    Hypothesis(String),

    #[error("budget exceeded in {stage}: needed {needed:.3e}, allowed {allowed:.3e}")]
    Budget { stage: String, needed: f64, allowed: f64 },

    #[error("no event detected: {0}")]
    NoEvent(String),

    #[error("iteration cap {cap} reached in {stage} (achieved {achieved:.3e})")]
    IterationCap { stage: String, cap: usize, achieved: f64 },

    #[error("newton iteration failed at {point:?} (residual {residual:.3e})")]
    NewtonFailure { point: Vec<f64>, residual: f64 },

    #[error("missing transition from {from} to {to}")]
    MissingTransition { from: String, to: String },

    #[error("unknown orbit {0}")]
    UnknownOrbit(String),

    #[error("{stage}: {message}")]
    Stage { stage: String, message: String },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn stage(stage: &str, message: impl Into<String>) -> Self {
        Error::Stage { stage: stage.to_string(), message: message.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
