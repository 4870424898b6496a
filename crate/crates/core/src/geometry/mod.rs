//! Rigid-body geometry: vectors, quaternions and poses, convex hulls, and
//! box-box distance and penetration queries for the gripper collision model.

mod boxes;
mod hull;
mod quaternion;
mod vector;

pub use boxes::{
    closest_distance, collect_contacts, penetration, segment_distance, solid_cuboid_inertia,
    Contact, GripperShape, OrientedBox, Penetration, ShapeSet,
};
pub use hull::{build_convex_hull, ConvexHull, HullFace};
pub use quaternion::{euler_to_quaternion, rotation_vector_between, Mat3, Pose, Twist, UnitQuaternion};
pub use vector::Vector3;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate geometry: {0}")]
    Degenerate(String),
}

/// `true` iff `normal . p <= offset + margin` on every hull face.
pub fn hull_contains(hull: &ConvexHull, p: Vector3, margin: f64) -> bool {
    hull.contains(p, margin)
}
