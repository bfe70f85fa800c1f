//! Kernel quadrature in Korobov and Matérn reproducing-kernel Hilbert spaces.
//!
//! The crate builds quadrature rules (randomly shifted rank-1 lattices,
//! Bayesian quadrature with and without a weight-norm constraint, plain Monte
//! Carlo, midpoint grids), evaluates their worst-case error in closed form and
//! runs convergence experiments for integrands that are less smooth than the
//! space the rule was designed for.
//!
//! Modules:
//!
//! * [`kernels`]: Bernoulli-polynomial Korobov kernels, truncated Mercer series
//!   for their powers, half-integer Matérn kernels.
//! * [`point_sets`]: i.i.d. samples, CBC lattices, random shifts, grids.
//! * [`weights`]: uniform and Bayesian-quadrature weights, jittered SPD solve.
//! * [`wce`]: kernel mean embeddings and the worst-case error.
//! * [`harness`]: integrands, convergence runs, rate fits and CSV tables.
//!
//! Data-parallel loops go through [`Execution`]; with the `parallel` feature
//! disabled every mode runs sequentially and produces identical output.

pub mod error;
pub mod harness;
pub mod kernels;
mod par;
pub mod point_sets;
pub mod wce;
pub mod weights;

pub use error::{Error, Result};
pub use par::Execution;
