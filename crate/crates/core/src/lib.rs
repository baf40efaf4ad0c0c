//! Exact stationary analysis of a two-stage batch-service queue.
//!
//! The model: transactions arrive in a Poisson stream and wait in an
//! unbounded queue. A *generation* stage moves up to `b` queued transactions
//! into a block (active only while the block is empty and the queue is not);
//! a *building* stage appends the block and confirms everything in it
//! (active only while the block is nonempty). Both stages are exponential.
//!
//! The state `(block content, queue length)` is a block-structured Markov
//! process whose stationary distribution is matrix-geometric: `pi_k = pi_0 R^k`
//! where `R` is the minimal nonnegative solution of a polynomial matrix
//! equation. This crate solves that fixed point ([`matgeom`]), evaluates the
//! stationary performance measures — mean queue length, mean block content,
//! mean confirmation time — by two independent formulas ([`measures`]), and
//! cross-checks everything against a truncated-chain direct solve, a `b = 1`
//! closed form, and a discrete-event simulator ([`oracle`], [`sim`]).

// The dense kernels index several arrays by the same loop variable; the
// iterator/enumerate rewrites clippy suggests obscure the matrix algebra.
#![allow(clippy::needless_range_loop)]

pub mod linalg;
pub mod matgeom;
pub mod measures;
pub mod model;
pub mod oracle;
pub mod sim;

pub use linalg::{DenseMatrix, LinalgError};
pub use matgeom::{MatGeomSolution, RateMatrixVariant, SolveError, SolverOptions};
pub use measures::{PerformanceReport, SeriesEstimate};
pub use model::{BlockMatrices, ParameterError, QueueParameters, StabilityReport};
pub use oracle::{OracleError, TruncatedMeasures};
pub use sim::{SimConfig, SimulationResult};
