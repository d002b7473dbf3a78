//! Scheduled Relaxation Jacobi (SRJ) solvers.
//!
//! Relaxation schedules are built from Chebyshev polynomials whose image is
//! bounded by 1/3 on the widest possible part of `[-1, 1)`. A family of such
//! schemes is indexed by a scheme *level*, and a small data-driven controller
//! picks the level of the next cycle from the residual ratio of the previous
//! one. The crate also contains the linear systems used to exercise the
//! solver and the tooling that regenerates the controller's thresholds from
//! convergence data.

pub mod chebyshev;
pub mod cli;
pub mod csvfmt;
pub mod datacollect;
mod error;
pub mod problems;
pub mod schemes;
pub mod solver;
pub mod sparsemat;

pub use error::{Error, Result};
