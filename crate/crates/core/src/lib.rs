//! Bootstrap algebraic multigrid for rotated anisotropic diffusion problems.
//!
//! The setup pipeline measures strength of connection by algebraic distances
//! over a set of relaxed test vectors, picks coarse grids by compatible
//! relaxation, and builds interpolation by a penalized least-squares fit over
//! small coarse sets. Hierarchies are assessed by two-grid convergence rates
//! and by AMLI-preconditioned flexible conjugate gradients.

pub mod cli;
pub mod coarsening;
pub mod error;
pub mod interpolation;
pub mod metrics;
pub mod multigrid;
pub mod problems;
mod rng;
pub mod sparse;
pub mod strength;
pub mod testvectors;

pub use error::{Error, Result};
