//! Semi-supervised deep generative models for reject inference in credit scoring.
//!
//! Two generative classifiers are trained jointly on accepted applications
//! (features plus repayment outcome) and rejected applications (features only):
//!
//! - [`model1`]: a Gaussian-mixture latent prior `p(y) p(z|y) p(x|z)` with
//!   inference networks `q(y|x) q(z|x,y)`.
//! - [`model2`]: the same mixture prior with an auxiliary latent variable `a`
//!   feeding the classifier, `q(a|x) q(y|x,a) q(z|x,y)`, and a decoder
//!   conditioned on `(z, y)`.
//!
//! The crate also ships the substrate the models are built on ([`nn`] and
//! [`dists`]), the classical reject-inference baselines ([`baselines`]), the
//! experimental design and a synthetic generator with a closed-form Bayes
//! oracle ([`data`]), and the credit-scoring metric suite ([`eval`]).

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Numeric kernels index several parallel arrays with one counter.
#![allow(clippy::needless_range_loop)]

pub mod baselines;
pub mod data;
pub mod dists;
pub mod error;
pub mod eval;
pub mod model1;
pub mod model2;
pub mod nn;
pub mod rng;

mod latent;
mod schedule;

pub use error::{Error, Result};
