//! Numerical laboratory for the Information Bottleneck.
//!
//! The crate is organised bottom up: [`prob`] holds exact finite-alphabet
//! information measures, [`exact`] solves the bottleneck on finite joints,
//! [`manifold`] measures the dimension of predictive manifolds, [`chain`]
//! builds maximum-entropy simplex latents from Gaussians, [`sigreg`] tests
//! projected Gaussianity, and [`encoder`] trains parametric encoders with
//! leave-one-out minibatch rate estimators.

// Argument checks are written `!(x > 0.0)` on purpose so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Numerical kernels index several parallel arrays with one loop variable.
#![allow(clippy::needless_range_loop)]

pub mod chain;
pub mod encoder;
pub mod error;
pub mod exact;
pub mod manifold;
pub mod prob;
pub mod sigreg;
pub mod special;
pub mod tasks;

pub use error::{Error, Result};
