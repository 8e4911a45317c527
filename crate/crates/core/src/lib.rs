//! Narrow-band finite element method for the level set equation.
//!
//! The level set function is transported with an upwind discontinuous Galerkin
//! scheme and BDF time stepping on a thin band of simplices around the zero
//! level. After each step the solution is moved onto the next band by a
//! ghost-penalty stabilized L² (or H¹) projection.
//!
//! Module map:
//! - [`mesh`]: structured simplicial meshes of boxes, adjacency, element sets
//! - [`fe`]: Lagrange spaces on element sets, interpolation, Oswald averaging
//! - [`band`]: cut detection, neighbor layers, ghost-penalty faces
//! - [`transport`]: DG upwind assembly, BDF coefficients, inflow data
//! - [`extension`]: ghost-penalty extension problems
//! - [`geom`]: interface recovery, volumes and error functionals
//! - [`cases`]: analytic benchmark scenarios
//! - [`solver`]: sparse systems and linear solvers
//! - [`driver`]: the narrow-band time loop and convergence studies

pub mod band;
pub mod cases;
pub mod driver;
pub mod error;
pub mod extension;
pub mod fe;
pub mod geom;
pub mod mesh;
pub mod par;
pub mod quadrature;
pub mod solver;
pub mod transport;

pub use error::{Error, Result};
