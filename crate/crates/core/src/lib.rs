//! Random hyperplane tessellations of spherical and Euclidean sets.
//!
//! The crate measures how well the sign patterns of Gaussian hyperplanes
//! reproduce geodesic (or, for affine hyperplanes, Euclidean) distances,
//! lifts Euclidean sets onto the sphere, estimates Gaussian widths, and
//! constructs explicit witness pairs at which too few hyperplanes fail.
//!
//! It is `no_std` with `alloc`; file formats, parallel drivers and the
//! command line live in the companion `tessellate-cli` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod adversary;
pub mod batch;
pub mod complexity;
pub mod error;
pub mod experiments;
pub mod feasibility;
pub mod geometry;
pub mod lifting;
pub mod linalg;
pub mod math;
pub mod rng;
pub mod sets;
pub mod tessellation;

pub use batch::{sample_gaussian_batch, sign_embed, HyperplaneBatch, HyperplaneSource, SeededBatch};
pub use error::{Error, Result};
pub use geometry::{geodesic_distance, hamming_fraction, Point, SignPattern, UnitVector};
pub use rng::RngStream;
pub use sets::SetSpec;
