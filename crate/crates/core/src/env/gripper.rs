//! Collision and containment model of an open three-finger gripper.
//!
//! Gripper frame: palm centered at the origin, fingers extending along +z.
//! One finger sits at -x, two at +x, offset in y.

use super::config::KeypointRule;
use crate::geometry::{
    build_convex_hull, ConvexHull, GripperShape, OrientedBox, Pose, ShapeSet, UnitQuaternion,
    Vector3,
};

pub const PALM_HALF_EXTENTS: Vector3 = Vector3 { x: 0.07, y: 0.07, z: 0.025 };
const LINK_HALF_WIDTH: f64 = 0.015;
const LINK_HALF_THICKNESS: f64 = 0.01;
const KNUCKLE_X: f64 = 0.16;
const KNUCKLE_Z: f64 = 0.06;
const FINGERTIP_Z: f64 = 0.16;
/// (side, y) of each finger base.
const FINGERS: [(f64, f64); 3] = [(-1.0, 0.0), (1.0, 0.06), (1.0, -0.06)];

/// Box spanning the segment `a`-`b`, with its local z along the segment and
/// its thin local x axis in the xz plane of the gripper.
fn link_box(a: Vector3, b: Vector3) -> OrientedBox {
    let axis = b - a;
    let len = axis.norm();
    let z = axis / len;
    // rotate +z onto the link direction about the y axis
    let angle = z.x.atan2(z.z);
    let q = UnitQuaternion::from_axis_angle(Vector3::Y, angle).expect("unit axis");
    OrientedBox::new(
        Pose::new((a + b) * 0.5, q),
        Vector3::new(LINK_HALF_THICKNESS, LINK_HALF_WIDTH, 0.5 * len),
    )
    .expect("positive extents")
}

/// Palm plus a proximal and a distal link per finger, in the gripper frame.
pub fn default_gripper_shapes() -> ShapeSet {
    let mut shapes = vec![GripperShape {
        body: OrientedBox::new(Pose::IDENTITY, PALM_HALF_EXTENTS).expect("positive extents"),
        is_palm: true,
    }];
    for (side, y) in FINGERS {
        let base = Vector3::new(side * PALM_HALF_EXTENTS.x, y, PALM_HALF_EXTENTS.z);
        let knuckle = Vector3::new(side * KNUCKLE_X, y, KNUCKLE_Z);
        let tip = Vector3::new(side * KNUCKLE_X, y, FINGERTIP_Z);
        for (a, b) in [(base, knuckle), (knuckle, tip)] {
            shapes.push(GripperShape {
                body: link_box(a, b),
                is_palm: false,
            });
        }
    }
    ShapeSet::new(shapes).expect("one palm")
}

/// Hull of every corner of every gripper shape, in the gripper frame.
pub fn gripper_hull(shapes: &ShapeSet) -> ConvexHull {
    let pts: Vec<Vector3> = shapes.shapes().iter().flat_map(|s| s.body.corners()).collect();
    build_convex_hull(&pts).expect("gripper shapes span a volume")
}

/// Keypoints in the target frame.
pub fn target_keypoints(rule: KeypointRule, half_extents: Vector3) -> Vec<Vector3> {
    let local = OrientedBox::new(Pose::IDENTITY, half_extents).expect("validated extents");
    match rule {
        KeypointRule::CornersAndCenter => {
            let mut k = local.corners().to_vec();
            k.push(Vector3::ZERO);
            k
        }
        KeypointRule::Corners => local.corners().to_vec(),
        KeypointRule::Center => vec![Vector3::ZERO],
    }
}
