//! Finite-difference schemes for Fokker-Planck equations with a prescribed
//! invariant measure, together with monotonicity certification and
//! long-time diagnostics.

pub mod assembly;
pub mod cli;
pub mod config;
pub mod convergence;
pub mod error;
pub mod grid;
pub mod krylov;
pub mod monotonicity;
pub mod problem;
pub mod simulate;
pub mod sparse;

pub use error::{Error, Result};
pub use grid::{build_grid, quadrature_weights, Grid, Order};
