//! Hybrid lattice Boltzmann / finite element solvers for advection-diffusion
//! transport with overlapping multirate domain decomposition.

pub mod boundary;
pub mod chemistry;
pub mod coupling;
pub mod error;
pub mod fem;
pub mod lattice;
pub mod lbm;
pub mod transfer;

pub use error::{Error, Result};
