//! Numerical toolkit for the fractional equation `(-Δ)^s u + u = |u|^{p-2} u` on a
//! half-space with a hole: fractional Sobolev energies, the whole-space ground
//! state, cutoff test functions, the barycenter/degree argument and a constrained
//! min-max solver for the high-energy positive solution.

pub mod bubbles;
pub mod energy;
pub mod error;
pub mod fractional;
pub mod geometry;
pub mod grid;
pub mod minmax;
pub mod ground_state;
pub mod params;
pub mod reduce;
pub mod special;
pub mod spectral;
pub mod topology;

pub use error::{Error, Result};
pub use grid::{Field, GridSpec};
pub use params::ProblemParams;
pub use reduce::Reduction;
