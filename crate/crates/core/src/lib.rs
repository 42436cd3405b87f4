//! Deep autoassociative neural networks for denoising.
//!
//! The crate covers two workflows:
//!
//! - denoising signals drawn from a two-parameter process model
//!   ([`process`], [`training`], [`metrics`]);
//! - removing monofrequency noisy traces from 2D seismic sections with a
//!   patch-based network applied through overlapping windows ([`seismic`]).
//!
//! All network math lives in [`nn`]: dense layers with sigmoid or linear
//! activations, squared-error loss, backpropagation and momentum SGD, in
//! double precision throughout.

// `!(x > 0.0)` is used on purpose so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod matrix;
pub mod metrics;
pub mod nn;
pub mod process;
pub mod rng;
pub mod seismic;
mod textio;
pub mod training;

pub use error::{Error, Result};
pub use matrix::Matrix;
