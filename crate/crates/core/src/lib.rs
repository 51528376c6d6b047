//! Intent detection with self-attentive recurrent encoders.
//!
//! A self-contained toolkit for sentence-level intent classification:
//! utterances are embedded, encoded by an LSTM or bidirectional LSTM,
//! condensed to a single context vector by additive self-attention, and
//! classified by a softmax layer. Training minimizes summed cross-entropy
//! with an L2 penalty on the weight matrices, optimized by Adam with
//! mini-batches; all numerics are hand-written 64-bit code with exact
//! reproducibility from a single seed.
//!
//! The crate is organized bottom-up:
//!
//! - [`tensor`]: dense rank-1/2 arrays and the few kernels the models need
//! - [`rng`]: the deterministic xoshiro256++ generator
//! - [`layers`]: embedding, LSTM / Bi-LSTM, additive self-attention, and
//!   the softmax classifier, each with hand-derived backward passes
//! - [`model`]: the assembled architectures and their parameter registry
//! - [`gradcheck`]: finite-difference verification of any gradient
//! - [`data`]: preprocessing, vocabulary, corpus formats, splitting,
//!   batching, and a synthetic corpus generator
//! - [`training`]: the objective, Adam, and the training loop
//! - [`eval`]: confusion-matrix metrics and reports
//! - [`checkpoint`]: deterministic binary serialization
//! - [`config`] / [`cli`]: layered run configuration and the command-line
//!   tool

// Indexed loops in the numeric code mirror the subscripts of the math
// they implement (t over time steps, i/j over units); iterator chains
// would obscure which axis is which.
#![allow(clippy::needless_range_loop)]

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod data;
pub mod error;
pub mod eval;
pub mod gradcheck;
pub mod layers;
pub mod model;
pub mod rng;
pub mod tensor;
pub mod training;

pub use error::{Error, Result};
pub use model::{Architecture, ModelParams};
pub use training::{train, TrainConfig, TrainOutcome};
