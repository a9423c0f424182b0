//! Robust two-view epipolar geometry estimation with neural minimal-sample
//! filtering.
//!
//! The crate provides the building blocks of a USAC-style estimation
//! pipeline for essential and fundamental matrices, plus a tiny
//! permutation-invariant scoring network that filters minimal samples
//! before the expensive solve/verify steps:
//!
//! - [`geometry`]: correspondences, poses, epipolar models, error metrics.
//! - [`solvers`]: 5-point, 7-point and 8-point solvers with the polynomial
//!   machinery behind them.
//! - [`sampler`]: uniform and PROSAC minimal-sample draws, batch draws.
//! - [`nnfilter`]: the sample-scoring network (inference, loss, training,
//!   weight serialization).
//! - [`labels`]: ground-truth label computation for training the filter.
//! - [`ransac`]: the estimation loop (PROSAC + SPRT + local optimization,
//!   with optional neural filtering).
//! - [`synth`]: synthetic two-view scene generation for training and
//!   benchmarking.

pub mod geometry;
pub mod labels;
pub mod nnfilter;
pub mod ransac;
pub mod sampler;
pub mod solvers;
pub mod synth;

#[cfg(doctest)]
mod book;
