//! Independent reference computations used by the integration and
//! acceptance tests. Nothing here calls into the code paths being checked
//! beyond plain data accessors.
#![allow(dead_code)]

use pregrasp::geometry::{OrientedBox, Pose, UnitQuaternion, Vector3};
use rand::Rng;

/// Uniform random rotation (Shoemake's subgroup algorithm).
pub fn random_rotation<R: Rng>(rng: &mut R) -> UnitQuaternion {
    let u1: f64 = rng.random();
    let u2: f64 = rng.random::<f64>() * std::f64::consts::TAU;
    let u3: f64 = rng.random::<f64>() * std::f64::consts::TAU;
    let a = (1.0 - u1).sqrt();
    let b = u1.sqrt();
    UnitQuaternion::new_normalize(b * u3.cos(), a * u2.sin(), a * u2.cos(), b * u3.sin()).unwrap()
}

pub fn random_box<R: Rng>(rng: &mut R, center_span: f64, min_half: f64, max_half: f64) -> OrientedBox {
    let c = Vector3::new(
        rng.random_range(-center_span..center_span),
        rng.random_range(-center_span..center_span),
        rng.random_range(-center_span..center_span),
    );
    let h = Vector3::new(
        rng.random_range(min_half..max_half),
        rng.random_range(min_half..max_half),
        rng.random_range(min_half..max_half),
    );
    OrientedBox::new(Pose::new(c, random_rotation(rng)), h).unwrap()
}

/// Local coordinates via an explicit rotation matrix rather than quaternion
/// sandwich products.
fn to_local(b: &OrientedBox, p: Vector3) -> [f64; 3] {
    let m = b.pose.orientation.to_matrix().0;
    let d = p - b.pose.position;
    [
        m[0][0] * d.x + m[1][0] * d.y + m[2][0] * d.z,
        m[0][1] * d.x + m[1][1] * d.y + m[2][1] * d.z,
        m[0][2] * d.x + m[1][2] * d.y + m[2][2] * d.z,
    ]
}

/// Euclidean distance from `p` to the solid box, from per-axis excesses.
pub fn point_box_distance(b: &OrientedBox, p: Vector3) -> f64 {
    let l = to_local(b, p);
    let h = b.half_extents.to_array();
    (0..3)
        .map(|i| {
            let e = (l[i].abs() - h[i]).max(0.0);
            e * e
        })
        .sum::<f64>()
        .sqrt()
}

/// Surface samples: a `face_n x face_n` grid on each face (boundaries
/// included) plus `edge_n` points along each edge.
pub fn surface_samples(b: &OrientedBox, face_n: usize, edge_n: usize) -> Vec<Vector3> {
    let h = b.half_extents.to_array();
    let mut out = Vec::with_capacity(6 * face_n * face_n + 12 * edge_n);
    let lerp = |i: usize, n: usize, half: f64| -half + 2.0 * half * (i as f64) / ((n - 1) as f64);
    for axis in 0..3 {
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        for sign in [-1.0, 1.0] {
            for i in 0..face_n {
                for j in 0..face_n {
                    let mut l = [0.0; 3];
                    l[axis] = sign * h[axis];
                    l[u] = lerp(i, face_n, h[u]);
                    l[v] = lerp(j, face_n, h[v]);
                    out.push(b.pose.transform_point(Vector3::from(l)));
                }
            }
        }
    }
    for axis in 0..3 {
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        for su in [-1.0, 1.0] {
            for sv in [-1.0, 1.0] {
                for i in 0..edge_n {
                    let mut l = [0.0; 3];
                    l[axis] = lerp(i, edge_n, h[axis]);
                    l[u] = su * h[u];
                    l[v] = sv * h[v];
                    out.push(b.pose.transform_point(Vector3::from(l)));
                }
            }
        }
    }
    out
}

/// Dense sampling estimate of the minimum separation between two boxes.
pub fn sampled_box_distance(a: &OrientedBox, b: &OrientedBox, face_n: usize, edge_n: usize) -> f64 {
    let da = surface_samples(a, face_n, edge_n)
        .into_iter()
        .map(|p| point_box_distance(b, p))
        .fold(f64::INFINITY, f64::min);
    let db = surface_samples(b, face_n, edge_n)
        .into_iter()
        .map(|p| point_box_distance(a, p))
        .fold(f64::INFINITY, f64::min);
    da.min(db)
}

/// Supporting planes of a point set found by enumerating every triple and
/// keeping the planes with all points on one side. Returns `(normal, offset)`
/// with outward normals.
pub fn supporting_planes(points: &[Vector3], tol: f64) -> Vec<(Vector3, f64)> {
    let mut planes = Vec::new();
    let n = points.len();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let nrm = (points[j] - points[i]).cross(points[k] - points[i]);
                let len = nrm.norm();
                if len < 1e-12 {
                    continue;
                }
                let nrm = nrm / len;
                let off = nrm.dot(points[i]);
                let (mut above, mut below) = (false, false);
                for p in points {
                    let s = nrm.dot(*p) - off;
                    above |= s > tol;
                    below |= s < -tol;
                }
                match (above, below) {
                    (false, true) => planes.push((nrm, off)),
                    (true, false) => planes.push((-nrm, -off)),
                    _ => {}
                }
            }
        }
    }
    planes
}

/// Max signed distance of `p` over the given outward planes.
pub fn plane_set_signed_distance(planes: &[(Vector3, f64)], p: Vector3) -> f64 {
    planes
        .iter()
        .map(|(n, o)| n.dot(p) - o)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Penetration depth as the distance from the origin to the boundary of the
/// Minkowski difference `A - B`, using the triple-enumeration planes.
pub fn minkowski_penetration_depth(a: &OrientedBox, b: &OrientedBox) -> f64 {
    let mut diff = Vec::with_capacity(64);
    for p in a.corners() {
        for q in b.corners() {
            diff.push(p - q);
        }
    }
    let planes = supporting_planes(&diff, 1e-10);
    // origin is inside when boxes overlap; depth = min offset
    planes.iter().map(|(_, o)| *o).fold(f64::INFINITY, f64::min)
}

/// Projection overlap of two boxes along a unit direction, from corners.
pub fn directional_overlap(a: &OrientedBox, b: &OrientedBox, dir: Vector3) -> f64 {
    let proj = |bx: &OrientedBox| {
        bx.corners().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
            let s = c.dot(dir);
            (lo.min(s), hi.max(s))
        })
    };
    let (alo, ahi) = proj(a);
    let (blo, bhi) = proj(b);
    // translation needed to separate the intervals along `dir`
    (ahi - blo).min(bhi - alo)
}

/// Central finite difference of a scalar function.
pub fn central_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Composite Simpson rule on `[a, b]` with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    assert!(n % 2 == 0);
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + h * i as f64);
    }
    s * h / 3.0
}

/// World with the target scattered around the gripper's goal: far away, close
/// by, overlapping, and nearly aligned, so every reward term gets exercised.
pub fn random_world<R: Rng>(rng: &mut R, model: &pregrasp::env::GraspModel) -> pregrasp::env::WorldState {
    use pregrasp::geometry::Twist;
    let gripper = Pose::new(
        Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(0.0..2.0)),
        random_rotation(rng),
    );
    let goal_in_target = model.grasp_offset();
    let spread = [0.0, 0.01, 0.05, 0.2, 1.0, 3.0][rng.random_range(0..6)];
    let tilt = [0.0, 0.05, 0.3, 3.0][rng.random_range(0..4)];
    let wobble = UnitQuaternion::from_rotation_vector(
        Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * tilt,
    );
    let goal = Pose::new(
        gripper.position
            + Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * spread,
        gripper.orientation * wobble,
    );
    let target = goal.compose(&goal_in_target.inverse());
    let v = |rng: &mut R, s: f64| Vector3::new(rng.random_range(-s..s), rng.random_range(-s..s), rng.random_range(-s..s));
    pregrasp::env::WorldState {
        gripper_pose: gripper,
        gripper_twist: Twist::new(v(rng, 0.5), v(rng, 5.0)),
        target_pose: target,
        target_twist: Twist::new(v(rng, 0.4), v(rng, 2.0)),
        step_index: 0,
        finished: false,
        seed: 0,
    }
}
