#![allow(clippy::neg_cmp_op_on_partial_ord)]
//! Tools for sparse Bernoulli random matrices: samplers, exact rank and
//! singular values, zero-pattern probabilities, the steep/gradual vector
//! classification, expansion events, and a reproducible experiment harness.

pub mod error;
pub mod expansion;
pub mod harness;
pub mod model;
pub mod probability;
pub mod spectral;
pub mod structure;

pub use error::{Error, Result};
pub use model::{MatrixSample, ModelParams, Regime, SupportDescriptor};
