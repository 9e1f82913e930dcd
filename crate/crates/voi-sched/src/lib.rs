//! Query-aware sensor polling over packet-erasure channels.
//!
//! An edge node tracks a linear-Gaussian process with a Kalman filter, polls
//! one sensor per slot, and answers client queries (state, mean, variance,
//! maximum, count-in-range) from its belief. Scheduling policies range from
//! age-based (Maximum Age First) through one-step-optimal value-of-information
//! greedy to a from-scratch deep Q-learning agent, plus an exactly solvable
//! two-chain instance handled by policy iteration.
//!
//! The `examples/` directory has one runnable example per capability; the
//! `voi-sched` binary exposes the same machinery as `run`, `train`, `toy` and
//! `bench` subcommands.

pub mod dqn;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod kalman;
pub mod linalg;
pub mod policies;
pub mod queries;
pub mod query_process;
pub mod rng;
pub mod toy;

pub use error::{Error, Result};
