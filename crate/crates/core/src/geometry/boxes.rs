use serde::{Deserialize, Serialize};

use super::{GeometryError, Pose, Vector3};

/// Box with a pose (center and orientation) and strictly positive half-extents.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrientedBox {
    pub pose: Pose,
    pub half_extents: Vector3,
}

impl OrientedBox {
    pub fn new(pose: Pose, half_extents: Vector3) -> Result<Self, GeometryError> {
        if !(half_extents.min_component() > 0.0) || !half_extents.is_finite() {
            return Err(GeometryError::InvalidArgument(format!(
                "box half-extents must be positive and finite, got {half_extents:?}"
            )));
        }
        Ok(Self { pose, half_extents })
    }

    #[inline]
    pub fn center(&self) -> Vector3 {
        self.pose.position
    }

    /// World-frame unit axes of the box.
    pub fn axes(&self) -> [Vector3; 3] {
        let q = &self.pose.orientation;
        [q.rotate(Vector3::X), q.rotate(Vector3::Y), q.rotate(Vector3::Z)]
    }

    pub fn corners(&self) -> [Vector3; 8] {
        let h = self.half_extents;
        std::array::from_fn(|i| {
            let local = Vector3::new(
                if i & 1 == 0 { -h.x } else { h.x },
                if i & 2 == 0 { -h.y } else { h.y },
                if i & 4 == 0 { -h.z } else { h.z },
            );
            self.pose.transform_point(local)
        })
    }

    /// The 12 edges as corner index pairs (see [`OrientedBox::corners`]).
    pub const EDGES: [(usize, usize); 12] = [
        (0, 1),
        (2, 3),
        (4, 5),
        (6, 7),
        (0, 2),
        (1, 3),
        (4, 6),
        (5, 7),
        (0, 4),
        (1, 5),
        (2, 6),
        (3, 7),
    ];

    /// Closest point of the (solid) box to `p`.
    pub fn closest_point(&self, p: Vector3) -> Vector3 {
        let local = self.pose.inverse_transform_point(p);
        let h = self.half_extents;
        let clamped = Vector3::new(
            local.x.clamp(-h.x, h.x),
            local.y.clamp(-h.y, h.y),
            local.z.clamp(-h.z, h.z),
        );
        self.pose.transform_point(clamped)
    }

    pub fn distance_to_point(&self, p: Vector3) -> f64 {
        (p - self.closest_point(p)).norm()
    }

    pub fn contains_point(&self, p: Vector3) -> bool {
        let local = self.pose.inverse_transform_point(p).abs();
        let h = self.half_extents;
        local.x <= h.x && local.y <= h.y && local.z <= h.z
    }

    /// Half-length of the box's projection onto unit direction `axis`.
    #[inline]
    pub fn projected_radius(&self, axis: Vector3) -> f64 {
        let [u, v, w] = self.axes();
        self.half_extents.x * u.dot(axis).abs()
            + self.half_extents.y * v.dot(axis).abs()
            + self.half_extents.z * w.dot(axis).abs()
    }

    pub fn mass_inertia(&self, mass: f64) -> Vector3 {
        solid_cuboid_inertia(mass, self.half_extents)
    }
}

/// Principal moments of a solid cuboid about its center.
pub fn solid_cuboid_inertia(mass: f64, half_extents: Vector3) -> Vector3 {
    let d = half_extents * 2.0;
    Vector3::new(
        mass * (d.y * d.y + d.z * d.z) / 12.0,
        mass * (d.x * d.x + d.z * d.z) / 12.0,
        mass * (d.x * d.x + d.y * d.y) / 12.0,
    )
}

/// Minimum translation needed to separate two overlapping boxes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Penetration {
    pub depth: f64,
    /// Unit normal pointing from the first box into the second.
    pub normal: Vector3,
}

/// Separating-axis test over the 15 candidate axes of a box pair. Returns
/// the minimum-overlap axis when every axis overlaps strictly.
pub fn penetration(a: &OrientedBox, b: &OrientedBox) -> Option<Penetration> {
    let aa = a.axes();
    let ba = b.axes();
    let d = b.center() - a.center();

    let mut best = Penetration {
        depth: f64::INFINITY,
        normal: Vector3::ZERO,
    };
    let mut test = |axis: Vector3| -> bool {
        let Some(axis) = axis.try_normalize(1e-9) else {
            return true;
        };
        let dist = d.dot(axis);
        let overlap = a.projected_radius(axis) + b.projected_radius(axis) - dist.abs();
        if overlap <= 0.0 {
            return false;
        }
        if overlap < best.depth {
            best.depth = overlap;
            best.normal = if dist >= 0.0 { axis } else { -axis };
        }
        true
    };

    for axis in aa.iter().chain(ba.iter()) {
        if !test(*axis) {
            return None;
        }
    }
    for u in &aa {
        for v in &ba {
            if !test(u.cross(*v)) {
                return None;
            }
        }
    }
    Some(best)
}

/// Minimum Euclidean separation between two solid boxes; `0` when they overlap.
pub fn closest_distance(a: &OrientedBox, b: &OrientedBox) -> f64 {
    if penetration(a, b).is_some() {
        return 0.0;
    }
    let ca = a.corners();
    let cb = b.corners();
    let mut best = f64::INFINITY;
    for p in &ca {
        best = best.min(b.distance_to_point(*p));
    }
    for p in &cb {
        best = best.min(a.distance_to_point(*p));
    }
    for &(i, j) in &OrientedBox::EDGES {
        for &(k, l) in &OrientedBox::EDGES {
            best = best.min(segment_distance(ca[i], ca[j], cb[k], cb[l]));
        }
    }
    best
}

/// Distance between segments `p1-q1` and `p2-q2`.
pub fn segment_distance(p1: Vector3, q1: Vector3, p2: Vector3, q2: Vector3) -> f64 {
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.norm_squared();
    let e = d2.norm_squared();
    let f = d2.dot(r);
    const EPS: f64 = 1e-18;

    let (s, t) = if a <= EPS && e <= EPS {
        (0.0, 0.0)
    } else if a <= EPS {
        (0.0, (f / e).clamp(0.0, 1.0))
    } else {
        let c = d1.dot(r);
        if e <= EPS {
            ((-c / a).clamp(0.0, 1.0), 0.0)
        } else {
            let b = d1.dot(d2);
            let denom = a * e - b * b;
            let mut s = if denom > EPS {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let mut t = (b * s + f) / e;
            if t < 0.0 {
                t = 0.0;
                s = (-c / a).clamp(0.0, 1.0);
            } else if t > 1.0 {
                t = 1.0;
                s = ((b - c) / a).clamp(0.0, 1.0);
            }
            (s, t)
        }
    };
    ((p1 + d1 * s) - (p2 + d2 * t)).norm()
}

/// One penetrating gripper-shape/target pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Contact {
    pub point: Vector3,
    /// Unit normal from the gripper shape into the target.
    pub normal: Vector3,
    pub depth: f64,
    pub force_magnitude: f64,
}

impl Contact {
    /// Force applied to the target.
    pub fn force(&self) -> Vector3 {
        self.normal * self.force_magnitude
    }
}

/// A gripper link or palm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GripperShape {
    pub body: OrientedBox,
    pub is_palm: bool,
}

/// Collision model of the gripper: a palm plus finger links.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeSet {
    shapes: Vec<GripperShape>,
    palm: usize,
}

impl ShapeSet {
    pub fn new(shapes: Vec<GripperShape>) -> Result<Self, GeometryError> {
        let palms: Vec<usize> = shapes
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_palm)
            .map(|(i, _)| i)
            .collect();
        if palms.len() != 1 {
            return Err(GeometryError::InvalidArgument(format!(
                "shape set needs exactly one palm, found {}",
                palms.len()
            )));
        }
        for s in &shapes {
            OrientedBox::new(s.body.pose, s.body.half_extents)?;
        }
        Ok(Self {
            shapes,
            palm: palms[0],
        })
    }

    pub fn shapes(&self) -> &[GripperShape] {
        &self.shapes
    }

    pub fn palm(&self) -> &OrientedBox {
        &self.shapes[self.palm].body
    }

    /// The same set placed at `pose` (shapes are taken as local to `pose`).
    pub fn transformed(&self, pose: &Pose) -> ShapeSet {
        ShapeSet {
            shapes: self
                .shapes
                .iter()
                .map(|s| GripperShape {
                    body: OrientedBox {
                        pose: pose.compose(&s.body.pose),
                        half_extents: s.body.half_extents,
                    },
                    is_palm: s.is_palm,
                })
                .collect(),
            palm: self.palm,
        }
    }
}

/// Penalty contacts between every gripper shape and the target.
///
/// `relative_velocity` is gripper velocity minus target velocity; its
/// component along the contact normal is the approach speed fed to the damper.
pub fn collect_contacts(
    gripper: &ShapeSet,
    target: &OrientedBox,
    stiffness: f64,
    damping: f64,
    relative_velocity: Vector3,
) -> Vec<Contact> {
    gripper
        .shapes()
        .iter()
        .filter_map(|s| {
            let pen = penetration(&s.body, target)?;
            let approach = relative_velocity.dot(pen.normal);
            let force = (stiffness * pen.depth + damping * approach).max(0.0);
            Some(Contact {
                point: contact_point(&s.body, target, pen.normal),
                normal: pen.normal,
                depth: pen.depth,
                force_magnitude: force,
            })
        })
        .collect()
}

/// Centroid of the gripper shape's deepest feature along `normal`, pulled
/// into the target.
fn contact_point(shape: &OrientedBox, target: &OrientedBox, normal: Vector3) -> Vector3 {
    let corners = shape.corners();
    let depths: Vec<f64> = corners.iter().map(|c| c.dot(normal)).collect();
    let max = depths.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-9 * (1.0 + max.abs());
    let (sum, n) = corners
        .iter()
        .zip(&depths)
        .filter(|(_, &d)| d >= max - tol)
        .fold((Vector3::ZERO, 0.0), |(s, n), (c, _)| (s + *c, n + 1.0));
    target.closest_point(sum / n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::UnitQuaternion;

    fn unit_cube_at(x: f64) -> OrientedBox {
        OrientedBox::new(Pose::from_position(Vector3::new(x, 0.0, 0.0)), Vector3::splat(0.5)).unwrap()
    }

    #[test]
    fn axis_aligned_gap() {
        let d = closest_distance(&unit_cube_at(0.0), &unit_cube_at(3.0));
        assert!((d - 2.0).abs() < 1e-12, "{d}");
    }

    #[test]
    fn coincident_boxes_have_zero_distance() {
        assert_eq!(closest_distance(&unit_cube_at(0.0), &unit_cube_at(0.0)), 0.0);
    }

    #[test]
    fn rotated_gap_edge_to_face() {
        // a cube rotated 45 deg about z presents an edge at x = 3 - sqrt(2)/2
        let q = UnitQuaternion::from_axis_angle(Vector3::Z, std::f64::consts::FRAC_PI_4).unwrap();
        let b = OrientedBox::new(Pose::new(Vector3::new(3.0, 0.0, 0.0), q), Vector3::splat(0.5)).unwrap();
        let d = closest_distance(&unit_cube_at(0.0), &b);
        let expected = 3.0 - 0.5 - 0.5 * 2f64.sqrt();
        assert!((d - expected).abs() < 1e-12, "{d} vs {expected}");
    }

    #[test]
    fn penetration_depth_along_x() {
        let pen = penetration(&unit_cube_at(0.0), &unit_cube_at(0.9)).unwrap();
        assert!((pen.depth - 0.1).abs() < 1e-12);
        assert!((pen.normal - Vector3::X).norm() < 1e-12);
    }

    #[test]
    fn invalid_half_extents() {
        assert!(OrientedBox::new(Pose::IDENTITY, Vector3::new(1.0, 0.0, 1.0)).is_err());
    }

    #[test]
    fn shape_set_requires_one_palm() {
        let b = unit_cube_at(0.0);
        let none = vec![GripperShape { body: b, is_palm: false }];
        assert!(ShapeSet::new(none).is_err());
        let two = vec![GripperShape { body: b, is_palm: true }; 2];
        assert!(ShapeSet::new(two).is_err());
    }

    fn palm_only(x: f64) -> ShapeSet {
        ShapeSet::new(vec![GripperShape {
            body: unit_cube_at(x),
            is_palm: true,
        }])
        .unwrap()
    }

    #[test]
    fn separated_shapes_have_no_contacts() {
        let contacts = collect_contacts(&palm_only(0.0), &unit_cube_at(3.0), 1000.0, 10.0, Vector3::ZERO);
        assert!(contacts.is_empty());
    }

    #[test]
    fn linear_spring_contact() {
        let contacts = collect_contacts(&palm_only(0.0), &unit_cube_at(0.999), 1000.0, 10.0, Vector3::ZERO);
        assert_eq!(contacts.len(), 1);
        let c = contacts[0];
        assert!((c.depth - 0.001).abs() < 1e-12);
        assert!((c.force_magnitude - 1.0).abs() < 1e-9);
        assert!((c.normal - Vector3::X).norm() < 1e-12);
    }

    #[test]
    fn damping_never_pulls() {
        // separating fast: spring + damper would be negative, clamps to zero
        let contacts = collect_contacts(
            &palm_only(0.0),
            &unit_cube_at(0.999),
            1000.0,
            10.0,
            Vector3::new(-5.0, 0.0, 0.0),
        );
        assert_eq!(contacts[0].force_magnitude, 0.0);
    }

    #[test]
    fn segment_distance_cases() {
        let d = segment_distance(
            Vector3::ZERO,
            Vector3::X,
            Vector3::new(0.5, 1.0, -1.0),
            Vector3::new(0.5, 1.0, 1.0),
        );
        assert!((d - 1.0).abs() < 1e-15);
        // parallel
        let d = segment_distance(Vector3::ZERO, Vector3::X, Vector3::new(2.0, 1.0, 0.0), Vector3::new(3.0, 1.0, 0.0));
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn cuboid_inertia() {
        let i = solid_cuboid_inertia(12.0, Vector3::new(0.5, 1.0, 1.5));
        assert!((i - Vector3::new(13.0, 10.0, 5.0)).norm() < 1e-12);
    }
}
