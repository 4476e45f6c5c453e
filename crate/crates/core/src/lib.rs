//! Numerical laboratory for periodic linear symplectic cocycles.

pub mod cli;
pub mod cocycle;
pub mod dichotomy;
pub mod domination;
pub mod error;
pub mod genfunc;
pub mod linalg;
pub mod par;
pub mod perturbation;
pub mod symplectic;
pub mod transitions;

pub use error::{Error, Result};
