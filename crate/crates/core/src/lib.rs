//! Light-field disparity estimation with entropy-selected matching windows
//! and occlusion-aware viewpoint selection.
//!
//! The pipeline:
//! 1. [`matcher::initial_disparity`] gives a coarse disparity for the central view.
//! 2. [`region::identify_regions`] labels pixels as occluding, occluded,
//!    texture or smooth.
//! 3. [`window::WindowSelector`] picks a window shape and size per pixel by
//!    maximizing the matching entropy, and occluded pixels keep only the
//!    viewpoints that see their window.
//! 4. [`matcher::estimate_disparity`] searches the fine disparity grid with
//!    those windows and refines the minimum to subpixel precision.
//! 5. [`tv::tv_refine`] fills and smooths the smooth regions.
//!
//! [`synth`] renders layered test scenes with exact ground truth and
//! [`eval`] scores estimates against it.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod config;
pub mod entropy;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod lightfield;
pub mod matcher;
pub mod pfm;
pub mod region;
pub mod synth;
pub mod tv;
mod volume;
pub mod window;

pub use config::SceneConfig;
pub use error::{Error, Result};
pub use geometry::Calibration;
pub use lightfield::{DisparityMap, Image, LightField};
pub use matcher::{estimate_disparity, EstimatorConfig, Estimate, WindowStrategy};
pub use region::{Region, RegionMap};
pub use volume::CostNorm;
