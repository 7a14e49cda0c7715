//! Distributed policy-gradient training with pluggable gradient merge
//! strategies.
//!
//! A synchronous parameter server coordinates `k` workers. Each worker runs a
//! clipped-surrogate policy-gradient agent in its own independently seeded
//! environment, collects a fixed number of timesteps per round, and sends one
//! gradient (or, for federated averaging, locally trained parameters) back to
//! the server. The server merges the contributions with a configurable
//! strategy and broadcasts the updated parameters.
//!
//! Everything is plain `f64` on flat parameter vectors: no autograd, no BLAS.
//! Runs are byte-for-byte reproducible for a fixed config and seed.

pub mod config;
pub mod csvio;
pub mod env;
pub mod error;
pub mod harness;
pub mod merge;
pub mod metrics;
pub mod nn;
pub mod ppo;
pub mod runtime;

mod mathutil;

pub use error::{Error, Result};
