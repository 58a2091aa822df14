//! Single-loop primal-dual solvers for non-convex problems with functional
//! inequality constraints, `min f(x) + r(x) s.t. g(x) <= 0`.
//!
//! * [`plada`] handles constraints given by a subgradient oracle.
//! * [`ppala`] handles smooth constraints through an augmented Lagrangian.
//! * [`kkt`] computes residuals and checks the per-iteration relations the
//!   convergence analysis relies on.
//! * [`problems`] builds the benchmark formulations.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]
// `!(x > 0.0)` is used on purpose so that NaN inputs fail validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod kkt;
pub mod linalg;
pub mod monitor;
pub mod penalty;
pub mod plada;
pub mod ppala;
pub mod problem;
pub mod problems;
pub mod solver;
pub mod state;
pub mod trace;

pub use error::{Error, Result};
pub use kkt::{KktReport, KktTolerances};
pub use plada::{derive_plada_params, plada_step, run_plada, PladaOverrides, PladaParams};
pub use ppala::{derive_ppala_params, ppala_step, run_ppala, PpalaOverrides, PpalaParams};
pub use problem::{ConstantEstimates, ProblemSpec, Regularizer, Smoothness};
pub use solver::{SolveResult, StopReason};
pub use state::IterateState;
pub use trace::{TraceRecord, TraceSink};
