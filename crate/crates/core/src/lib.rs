//! Sparse-feature image decomposition.
//!
//! Splits an image `f` into a smooth/piecewise-constant layer `u` and a
//! sparse feature layer `v` by minimizing
//!
//! ```text
//! beta ||v||_1 + sum_m alpha_m ||K_m u||_1 + 1/2 ||u + v - f||_2^2
//! ```
//!
//! with periodic convolution kernels `K_m`. The crate provides the scaled
//! ADMM solver ([`admm`]), its unrolled network form with per-layer
//! parameters ([`unroll`]), a synthetic scene generator ([`synth`]),
//! segmentation metrics ([`metrics`]), the log-domain multichannel pipeline
//! ([`pipeline`]) and image/parameter file formats ([`io`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod admm;
pub mod error;
pub mod grid;
pub mod io;
pub mod metrics;
pub mod ops;
pub mod oracle;
pub mod pipeline;
pub mod selftest;
pub mod synth;
pub mod unroll;

pub use error::{Error, Result};
pub use grid::{Grid, GridStack};
