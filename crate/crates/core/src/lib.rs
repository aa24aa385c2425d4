//! Uncertainty-aware tree search over a synthetic stochastic-verifier
//! environment, with the uncertainty-agnostic baselines it is compared
//! against, a learned budget controller, and an experiment harness.

pub mod controller;
pub mod env;
pub mod error;
pub mod harness;
pub mod rng;
pub mod scorer;
pub mod search;

pub use error::{Error, Result};
