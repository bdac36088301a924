//! Connecting orbits of `q'' = ∇V(q)` for multi-well potentials: action
//! minimization, minimizer gap detection, climbing-image mountain-pass
//! relaxation, the reflection-equivariant pipeline, and numerical audits of
//! the standing assumptions on `V`.

pub mod cli;
pub mod curve;
pub mod error;
pub mod linalg;
pub mod minimize;
pub mod mountainpass;
pub mod potential;
pub mod symmetry;

pub use curve::{DiscreteCurve, Grid};
pub use error::{Error, Result};
pub use potential::PotentialSpec;
