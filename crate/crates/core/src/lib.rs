//! Stochastic Frank-Wolfe for constrained finite-sum minimization.
//!
//! The objective has generalized linear structure,
//! `min_{w in C} (1/n) sum_i f_i(x_i^T w)`, and every solver here keeps a
//! per-sample gradient table so that one iteration touches only the sampled
//! rows of the design matrix.
//!
//! Module map:
//! - [`numkit`]: dense/CSR kernels and the incremental argmax tracker.
//! - [`problem`]: loss families and the finite-sum objective.
//! - [`constraints`]: constraint sets, linear minimization oracles, diameters.
//! - [`solvers`]: SFW, deterministic FW and the two stochastic baselines.
//! - [`diagnostics`]: gap estimators and the rate-bound evaluators.
//! - [`bench`]: dataset IO, synthetic data, experiment orchestration.
//! - [`verify`]: the self-check battery behind `sfwkit verify`.

pub mod bench;
pub mod constraints;
pub mod diagnostics;
mod error;
pub mod numkit;
pub mod problem;
pub mod solvers;
pub mod verify;

pub use constraints::{ConstraintKind, ConstraintSet, Norm, VertexStep};
pub use error::{Error, Result};
pub use numkit::{ArgmaxTracker, DesignMatrix};
pub use problem::{LossKind, LossModel, Problem};
pub use solvers::{RunConfig, Schedule, SolverKind, SolverState, TraceRow};
