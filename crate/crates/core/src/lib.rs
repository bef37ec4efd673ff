//! Berk-Nash equilibria of misspecified Markov decision processes.
//!
//! A subjective MDP pairs a finite MDP with a parameterized family of
//! transition models that need not contain the truth. This crate computes
//! the steady states of such problems — the stationary state–action
//! distribution together with the KL-best-fit inferred model — simulates
//! the underlying Bayesian learning process, runs comparative-statics
//! sweeps with stochastic-order verdicts, and evaluates the objective
//! welfare cost of misspecification with its certified upper bound.
//!
//! Built-in example environments live in [`registry`]; the command-line
//! front end ships in the companion `berknash-cli` crate.

pub mod comparative;
pub mod equilibrium;
mod error;
pub mod grid;
pub mod lattice;
pub mod learning;
pub mod mdp;
pub mod numeric;
pub mod registry;
pub mod smdp;
pub mod synth;
pub mod welfare;

pub use error::{Error, Result};
