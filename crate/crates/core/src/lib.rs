//! Dual point/mesh rasterization of learnable, view-dependent vertex
//! descriptors, a small differentiable render head, and a scene fitting
//! loop that optimizes both against posed images.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root pick a concrete precision.

// `!(x > 0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod descriptors;
pub mod diffrender;
pub mod error;
pub mod geometry;
pub mod image;
pub mod io;
pub mod linalg;
pub mod rasterizer;
pub mod scalar;
pub mod synthetic;

pub use descriptors::{DescriptorSet, FeatureImage};
pub use error::{Error, Result};
pub use geometry::{Camera, CameraStats, SceneSplit, TriangleMesh};
pub use image::Image;
pub use linalg::{Mat3, Vec3};
pub use rasterizer::{MeshFragmentBuffer, PointFragmentBuffer};
pub use scalar::Real;

pub type Camera32 = Camera<f32>;
pub type Camera64 = Camera<f64>;
pub type Mesh32 = TriangleMesh<f32>;
pub type Mesh64 = TriangleMesh<f64>;
pub type Descriptors32 = DescriptorSet<f32>;
pub type Descriptors64 = DescriptorSet<f64>;
pub type Image32 = Image<f32>;
pub type Image64 = Image<f64>;
