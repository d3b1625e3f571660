//! Generalized Bhattacharyya information measures, their data-processing
//! inequalities, and the Bayesian MSE lower bounds they produce for
//! parameter estimation over AWGN and Gaussian-fading channels.

// `!(x > 0.0)` is used deliberately so NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod measures;
pub mod quad;
pub mod rd;
pub mod channel_measures;
pub mod bounds;
pub mod mc_sim;
pub mod parallel;
