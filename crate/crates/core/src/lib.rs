//! Numerical tools for the boundary Yamabe problem with two normalization
//! weights `(a, b)`.
//!
//! * [`halfspace`]: cap parametrization, the half-space invariant `Y_{a,b}`,
//!   and the extremal bubble.
//! * [`numerics`]: quadrature, radial meshes, half-space grids and
//!   finite differences.
//! * [`variational`]: subcritical minimization on radial model manifolds.
//! * [`geometry_checks`]: conformal Killing algebra and the linearized
//!   curvature identities around the bubble.
//! * [`mass_flux`]: mass of asymptotically flat half-space metrics.

pub mod error;
pub mod geometry_checks;
pub mod halfspace;
pub mod mass_flux;
pub mod numerics;
pub mod poly;
pub mod report;
pub mod variational;

pub use error::{Error, Result};
pub use halfspace::{Bubble, CapSolution, Dim, Weights};
