//! Reflective symmetry planes for 3D scenes: annotation from mirrored
//! correspondences, recovery from signed-distance maps, evaluation, and
//! symmetry-based completion.

pub mod align;
pub mod cluster;
pub mod error;
pub mod fit;
pub mod geom;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod synth;

pub use error::{Error, Result};
pub use geom::{CameraModel, DepthMap, Mat3, Plane, PointCloud, PointMap, SignedDistanceMap, Vec3};
