//! Dense metric depth from a relative depth prior and sparse metric anchors.
//!
//! The central operation is [`poisson::poisson_complete`]: the relative depth
//! map is shifted by the globally fitted offset, its log-gradients become the
//! target field of a screened Poisson problem, and the sparse anchors pin the
//! solution to metric scale. Everything else in the crate is the tooling
//! needed to exercise and evaluate that step:
//!
//! - [`align`]: global scale/shift fitting and the locally weighted baseline
//! - [`sampling`]: random, keypoint and LiDAR-like sparse patterns
//! - [`geometry`]: back-projection, normals, point-map losses and alignment
//! - [`metrics`]: depth and point-wise error metrics, mean ranking
//! - [`io`]: PFM, 16-bit PNG, sparse CSV and JSON reports

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod align;
pub mod error;
pub mod geometry;
pub mod io;
pub mod metrics;
mod par;
pub mod poisson;
mod rng;
pub mod sampling;
pub mod synth;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    sparse_to_raster, validate_raster, AffineParams, CameraIntrinsics, DepthRaster, GradientField,
    LossReduction, LossWeights, NormalMap, PointMap, SolverConfig, SparseDepth, SparseEntry,
};
