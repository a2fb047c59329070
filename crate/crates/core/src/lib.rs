//! Differentially private synthetic data for 2-D (or higher) point streams
//! with insertions and deletions.
//!
//! The input is a turnstile stream of batches ([`stream`]). At every time
//! step a synthesizer ([`synth`]) selects a subtree of a fixed partition tree
//! with PrivTree ([`privtree`]), counts the batch on its leaves with
//! continual counters ([`counters`]) and releases a consistent tree function
//! together with sampled synthetic points. [`baselines`] holds simpler
//! offline-style competitors and [`eval`] the range-query error metrics.

pub mod baselines;
pub mod counters;
pub mod error;
pub mod eval;
pub mod harness;
pub mod hierarchy;
pub mod noise;
pub mod privtree;
pub mod stream;
pub mod synth;

pub use error::{Error, Result};
