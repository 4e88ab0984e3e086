//! Discretization substrate: quadrature rules, radial meshes, half-space
//! grids with finite-difference stencils, and convergence orders.

pub mod grid;
pub mod order;
pub mod quadrature;
pub mod radial;

pub use grid::{fd_derivatives, HalfGrid, Rank, TensorField};
pub use order::{estimate_order, OrderEstimate};
pub use radial::{make_annulus_mesh, make_ball_mesh, BoundarySphere, DiscreteField, RadialMesh};
