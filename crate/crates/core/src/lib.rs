//! Contour-flow shape constraints for binary segmentation.
//!
//! The crate computes exact signed distance functions of masks, turns them
//! into contour flow fields (unit tangents of the level sets), scores
//! segmentations against those fields with shape losses, and refines a
//! segmentation feature with a primal-dual iteration that drives the
//! gradient of the segmentation to be orthogonal to the flow.

pub mod cli;
pub mod distance;
pub mod error;
pub mod fields;
pub mod flow;
pub mod io;
pub mod losses;
pub mod operators;
pub mod pipeline;
pub mod refine;
pub mod segmetrics;
pub mod synth;

pub use error::{Error, Result};
pub use fields::{BinaryMask, GridShape, ScalarField, VectorField};
