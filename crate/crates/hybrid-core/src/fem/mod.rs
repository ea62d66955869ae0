//! Continuous finite elements for advection-diffusion: P1 triangles, and
//! Lagrange intervals of order 1 to 5.
//!
//! Assembly produces the semi-discrete system `M u' + K u = s` in the
//! Galerkin or SUPG form; [`ThetaStepper`] integrates it in time with
//! strongly imposed nodal values.

mod assembly;
mod locate;
mod mesh;
mod quadrature;
pub mod sparse;
mod stepping;

pub use assembly::{
    assemble, assemble_galerkin, assemble_supg, chi, lagrange_1d, supg_tau, FemSystem, Formulation, Physics, ScalarFn,
    VelocityFn, SUPG_SERIES_PECLET,
};
pub use locate::{interpolate_at, ElementLocator, Located};
pub use mesh::Mesh;
pub use quadrature::{gauss_legendre, triangle_degree4};
pub use sparse::{solve_sparse, CsrMatrix, LinearSolver};
pub use stepping::{FemState, ThetaStepper};
