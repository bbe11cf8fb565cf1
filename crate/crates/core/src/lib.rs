//! Randomization inference for conditional independence of outcomes and
//! treatments given covariates.
//!
//! The crate is organised bottom-up:
//!
//! - [`stats`]: OLS, probit maximum likelihood, normal distribution
//!   functions and seeded random streams.
//! - [`assignment`]: replicate treatment samplers for known designs, the
//!   two-stage lottery model and its outcome-proxy sensitivity extension.
//! - [`statistics`]: test statistics, principally the posterior-density
//!   statistic of the normal linear model.
//! - [`frt`]: Monte Carlo and exact Fisher randomization p-values and the
//!   exact-level randomized decision rule.
//! - [`sensitivity`]: one-draw-per-grid-point p-value curves smoothed with a
//!   Nadaraya-Watson estimator, and the minimal overturning strength.
//! - [`harness`]: simulation and enumeration checks of the validity and
//!   optimality properties.
//! - [`io`]: CSV ingestion, configuration and the end-to-end pipelines.
//!
//! Parallelism is provided by rayon behind the default `parallel` feature.
//! Every random draw comes from a stream keyed by `(seed, stream_id)`, so
//! results are bit-identical with or without the feature and for any
//! thread count.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assignment;
pub mod error;
pub mod frt;
pub mod harness;
pub mod io;
pub mod par;
pub mod sensitivity;
pub mod statistics;
pub mod stats;

pub use error::{Error, Result};
