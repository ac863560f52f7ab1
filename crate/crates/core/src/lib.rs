//! Exploration with intrinsic rewards on procedurally generated gridworlds.
//!
//! The crate is split by concern:
//!
//! - [`gridworld`]: a deterministic MiniGrid-style simulator with full and
//!   egocentric views in encoded and RGB form.
//! - [`intrinsic`]: impact-driven and frozen-embedding novelty rewards with
//!   per-episode visitation counts.
//! - [`nn`]: the small convolutional building blocks with hand-written
//!   backward passes used by every network here.
//! - [`learner`]: PPO with GAE over a vector of environments.
//! - [`harness`]: configuration, training runs, metrics, convergence
//!   detection, beta sweeps and plots.

pub mod error;
pub mod gridworld;
pub mod harness;
pub mod intrinsic;
pub mod learner;
pub mod nn;

pub use error::{Error, Result};
