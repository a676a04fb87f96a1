//! Numerical laboratory for degenerating families of toric Kähler metrics.
//!
//! The crate is organised bottom-up: [`polytope`] holds exact lattice data,
//! [`potential`] evaluates symplectic potentials and their Hessians,
//! [`curvature`] computes Ricci tensors, [`operator`] discretizes the
//! Fourier-reduced ∂̄-Laplacians, [`limit`] builds the Gaussian cone models
//! and [`harness`] runs sweeps and writes reports.

pub mod polytope;
pub mod potential;
pub mod curvature;
pub mod operator;
pub mod limit;
pub mod harness;
