//! Derivative-free optimization with Gaussian-smoothing random oracles.
//!
//! The crate provides:
//!
//! * [`oracle`]: direction sampling and the two-point estimate
//!   `g = ((f(x + mu u) - f(x)) / mu) B u` of the smoothed gradient.
//! * [`problems`]: the black-box [`Objective`] contract and a least-squares
//!   test family with certified smoothness and PL constants.
//! * [`sets`]: convex feasible sets with exact projection.
//! * [`solvers`]: the unconstrained random-search method (`rs_mu`) and its
//!   projected variant (`rsc_mu`), registered by name in a [`SolverRegistry`].
//! * [`analysis`]: closed-form convergence bounds and Monte Carlo checks of
//!   the inequalities they rest on.
//! * [`harness`]: config-driven multi-seed experiments with CSV and SVG output.
//!
//! All arithmetic is `f64`. Every random quantity is derived from a root seed
//! and a counter, so runs are bit-reproducible regardless of thread count.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod harness;
pub mod oracle;
pub mod problems;
pub mod sets;
pub mod solvers;

pub use error::{Result, ZoptError};
pub use oracle::{Direction, OracleConfig};
pub use problems::{FnObjective, Objective, TestProblem};
pub use sets::{Ball, BoxSet, FeasibleSet, SetSpec, WholeSpace};
pub use solvers::{RunRecord, Solver, SolverConfig, SolverRegistry};

/// Dense column vector used throughout the crate.
pub type Vector = nalgebra::DVector<f64>;
/// Dense matrix used throughout the crate.
pub type Matrix = nalgebra::DMatrix<f64>;
