//! Volumetric segmentation toolkit.
//!
//! - [`distance`]: exact Euclidean distance maps and boundary voxels
//! - [`filter`]: 3D Sobel–Feldman filtering and the soft contour operator
//! - [`loss`]: drain-adjusted contour loss and soft Dice, with gradients
//! - [`metrics`]: Dice, confusion counts, Hausdorff and average Hausdorff
//! - [`components`]: connected components and largest-component extraction
//! - [`pipeline`]: coarse-to-fine crop pipeline with pluggable predictors
//! - [`ensemble`]: summed-probability voting
//! - [`optimize`]: phantoms and direct loss optimization on a logit volume
//! - [`io`]: `.rvol` files and a NIfTI-1 reader
//! - [`cli`]: the `voxelseg` command line

pub mod cli;
pub mod components;
pub mod distance;
pub mod ensemble;
pub mod error;
pub mod filter;
pub mod io;
pub mod loss;
pub mod metrics;
pub mod optimize;
pub mod pipeline;
pub mod volume;

pub use error::{Error, Result};
pub use volume::{elementwise_mul, sum, threshold, Mask, Shape3, Volume};
