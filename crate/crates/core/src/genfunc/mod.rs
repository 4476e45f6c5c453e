//! Generating functions of planar symplectic maps and bump gluing to the
//! identity.
//!
//! A map `(x, y) ↦ (ξ, η)` with `∂η/∂y ≠ 0` is encoded by `S(x, η)` with
//! `S_x = y` and `S_η = ξ`.

mod chebyshev;
mod generating;
mod glue;
mod maps;

pub use chebyshev::{Jet2, Series, Series2};
pub use generating::{
    generating_from_map, grid_csv, map_from_generating, Chart, ChebyshevGenerating, ClosedForm, GenOptions,
    GeneratedMap, GeneratingFunction, MIN_ETA_Y, NEWTON_ITERS, NEWTON_TOL,
};
pub use glue::{
    c1_distance, glue_to_identity, region, smooth_step, BumpProfile, Domain, GlueReport, GlueResult, Glued, Region,
    MIN_MIXED,
};
pub use maps::{symplectic_defect, BuiltinMap, Jac, LocalMap, Point, PolyMap};
