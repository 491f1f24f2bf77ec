//! Covariate-balanced treatment assignment for randomized experiments.
//!
//! The crate is organised around four layers:
//!
//! * [`balance`] holds the fixed experiment frame: covariates, the sample
//!   covariance, the Mahalanobis balance metric and the chi-squared
//!   acceptance threshold.
//! * [`samplers`] draws assignments: complete randomization, acceptance-
//!   rejection, pair-switching and Langevin-gradient rerandomization.
//! * [`inference`] provides the difference-in-means estimator, Fisher
//!   randomization tests conditional on a sampler, and confidence intervals
//!   by test inversion.
//! * [`simlab`] runs seeded Monte Carlo studies (timing, estimation,
//!   inference, hyperparameter sensitivity).
//!
//! Replication loops run on rayon when the default `parallel` feature is
//! enabled. Every replication owns a deterministically derived random stream,
//! so results do not depend on the number of worker threads.

pub mod balance;
pub mod error;
pub mod inference;
pub mod par;
pub mod samplers;
pub mod seed;
pub mod simlab;

pub use balance::{Assignment, CovariateMatrix, DesignContext};
pub use error::{Error, Result};
pub use samplers::{BalanceDraw, LgrConfig, MethodId, Sampler};

#[cfg(test)]
mod testutil;
