//! Temporal-distance-aware recurrent network for joint next-day stock
//! movement and abnormal-volatility prediction.
//!
//! A GRU encodes a window of log-normalized daily features. Every hidden
//! state is weighted by the inverse of its distance to the present, the
//! weighted sum is fed through one more GRU update to form a context vector,
//! and two logistic heads predict movement from `[h^t; c^t]` and volatility
//! from `[h^t; c^t; ŷ_m]`.
//!
//! - [`numerics`]: matrices, parameter storage, reverse-mode tape
//! - [`data`]: CSV frames, normalization, labels, windows, splits
//! - [`model`]: GRU cell, temporal-distance context, network, checkpoints
//! - [`train`]: joint loss, Adam, training loop, evaluation
//! - [`metrics`]: accuracy, MCC, AUC
//! - [`synth`]: planted-signal benchmark frames

pub mod data;
pub mod error;
pub mod metrics;
pub mod model;
pub mod numerics;
pub mod synth;
pub mod train;

pub use error::{Error, Result};
