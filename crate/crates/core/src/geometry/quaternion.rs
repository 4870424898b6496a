use std::ops::Mul;

use serde::{Deserialize, Serialize};

use super::{GeometryError, Vector3};

/// Rotation stored as a unit quaternion, canonicalized to `w >= 0`.
///
/// Every constructor re-normalizes, so long composition chains stay on the
/// unit sphere.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct UnitQuaternion {
    w: f64,
    x: f64,
    y: f64,
    z: f64,
}

impl Default for UnitQuaternion {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl UnitQuaternion {
    pub const IDENTITY: UnitQuaternion = UnitQuaternion { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    /// Normalizes `(w, x, y, z)` and flips the sign so that `w >= 0`.
    pub fn new_normalize(w: f64, x: f64, y: f64, z: f64) -> Result<Self, GeometryError> {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        if !n.is_finite() || n < 1e-12 {
            return Err(GeometryError::InvalidArgument(format!(
                "quaternion ({w}, {x}, {y}, {z}) cannot be normalized"
            )));
        }
        Ok(Self::from_raw_unchecked(w / n, x / n, y / n, z / n))
    }

    #[inline]
    fn from_raw_unchecked(w: f64, x: f64, y: f64, z: f64) -> Self {
        if w < 0.0 {
            Self { w: -w, x: -x, y: -y, z: -z }
        } else {
            Self { w, x, y, z }
        }
    }

    #[inline]
    fn renormalized(w: f64, x: f64, y: f64, z: f64) -> Self {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        Self::from_raw_unchecked(w / n, x / n, y / n, z / n)
    }

    #[inline]
    pub fn w(&self) -> f64 {
        self.w
    }
    #[inline]
    pub fn x(&self) -> f64 {
        self.x
    }
    #[inline]
    pub fn y(&self) -> f64 {
        self.y
    }
    #[inline]
    pub fn z(&self) -> f64 {
        self.z
    }

    /// Components in `[w, x, y, z]` order.
    #[inline]
    pub fn to_array(&self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    #[inline]
    pub fn vector_part(&self) -> Vector3 {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn from_axis_angle(axis: Vector3, angle: f64) -> Result<Self, GeometryError> {
        let axis = axis
            .try_normalize(1e-15)
            .ok_or_else(|| GeometryError::InvalidArgument("zero rotation axis".into()))?;
        let (s, c) = (0.5 * angle).sin_cos();
        Self::new_normalize(c, axis.x * s, axis.y * s, axis.z * s)
    }

    /// Exponential map: rotation of `|v|` radians about `v / |v|`.
    pub fn from_rotation_vector(v: Vector3) -> Self {
        let angle = v.norm();
        let half = 0.5 * angle;
        // sin(half)/angle, with its Taylor expansion near zero
        let k = if angle < 1e-8 {
            0.5 - angle * angle / 48.0
        } else {
            half.sin() / angle
        };
        Self::renormalized(half.cos(), v.x * k, v.y * k, v.z * k)
    }

    /// Logarithm map. The returned angle lies in `[0, pi]` because of the
    /// `w >= 0` canonical form.
    pub fn to_rotation_vector(&self) -> Vector3 {
        let v = self.vector_part();
        let s = v.norm();
        if s < 1e-12 {
            // 2 * atan2(s, w) / s -> 2 / w
            return v * (2.0 / self.w);
        }
        v * (2.0 * s.atan2(self.w) / s)
    }

    /// Rotation angle in `[0, pi]`.
    pub fn angle(&self) -> f64 {
        2.0 * self.vector_part().norm().atan2(self.w)
    }

    /// Fixed-axis (extrinsic) X then Y then Z rotation: `Rz(yaw) * Ry(pitch) * Rx(roll)`.
    pub fn from_euler_xyz(euler: Vector3) -> Result<Self, GeometryError> {
        if !euler.is_finite() {
            return Err(GeometryError::InvalidArgument(format!(
                "non-finite Euler angles {euler:?}"
            )));
        }
        let (sr, cr) = (0.5 * euler.x).sin_cos();
        let (sp, cp) = (0.5 * euler.y).sin_cos();
        let (sy, cy) = (0.5 * euler.z).sin_cos();
        Self::new_normalize(
            cr * cp * cy + sr * sp * sy,
            sr * cp * cy - cr * sp * sy,
            cr * sp * cy + sr * cp * sy,
            cr * cp * sy - sr * sp * cy,
        )
    }

    /// Inverse of [`UnitQuaternion::from_euler_xyz`]; pitch is returned in `[-pi/2, pi/2]`.
    pub fn to_euler_xyz(&self) -> Vector3 {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        let roll = (2.0 * (w * x + y * z)).atan2(1.0 - 2.0 * (x * x + y * y));
        let sinp = (2.0 * (w * y - z * x)).clamp(-1.0, 1.0);
        let pitch = sinp.asin();
        let yaw = (2.0 * (w * z + x * y)).atan2(1.0 - 2.0 * (y * y + z * z));
        Vector3::new(roll, pitch, yaw)
    }

    #[inline]
    pub fn inverse(&self) -> Self {
        Self::from_raw_unchecked(self.w, -self.x, -self.y, -self.z)
    }

    /// Rotates `v` by this quaternion.
    #[inline]
    pub fn rotate(&self, v: Vector3) -> Vector3 {
        // v' = v + 2w (q x v) + 2 q x (q x v)
        let q = self.vector_part();
        let t = q.cross(v) * 2.0;
        v + t * self.w + q.cross(t)
    }

    #[inline]
    pub fn inverse_rotate(&self, v: Vector3) -> Vector3 {
        self.inverse().rotate(v)
    }

    /// Row-major rotation matrix.
    pub fn to_matrix(&self) -> Mat3 {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        Mat3([
            [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
            [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
            [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
        ])
    }

    /// Absolute inner product; `1` for identical rotations.
    #[inline]
    pub fn abs_dot(&self, o: &Self) -> f64 {
        (self.w * o.w + self.x * o.x + self.y * o.y + self.z * o.z).abs()
    }
}

impl Mul for UnitQuaternion {
    type Output = UnitQuaternion;

    /// Hamilton product; `a * b` applies `b` first.
    fn mul(self, b: UnitQuaternion) -> UnitQuaternion {
        let a = self;
        UnitQuaternion::renormalized(
            a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        )
    }
}

impl TryFrom<[f64; 4]> for UnitQuaternion {
    type Error = GeometryError;

    fn try_from(a: [f64; 4]) -> Result<Self, GeometryError> {
        Self::new_normalize(a[0], a[1], a[2], a[3])
    }
}

impl From<UnitQuaternion> for [f64; 4] {
    fn from(q: UnitQuaternion) -> Self {
        q.to_array()
    }
}

/// Row-major 3x3 matrix, used for rotations and inertia tensors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub fn diagonal(d: Vector3) -> Self {
        Mat3([[d.x, 0.0, 0.0], [0.0, d.y, 0.0], [0.0, 0.0, d.z]])
    }

    pub fn mul_vec(&self, v: Vector3) -> Vector3 {
        let m = &self.0;
        Vector3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }

    pub fn transpose(&self) -> Self {
        let m = &self.0;
        Mat3([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn mul_mat(&self, o: &Mat3) -> Mat3 {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|k| self.0[i][k] * o.0[k][j]).sum();
            }
        }
        Mat3(out)
    }

    pub fn column(&self, j: usize) -> Vector3 {
        Vector3::new(self.0[0][j], self.0[1][j], self.0[2][j])
    }
}

/// Rigid placement: orientation applied first, then translation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vector3,
    pub orientation: UnitQuaternion,
}

impl Pose {
    pub const IDENTITY: Pose = Pose {
        position: Vector3::ZERO,
        orientation: UnitQuaternion::IDENTITY,
    };

    pub fn new(position: Vector3, orientation: UnitQuaternion) -> Self {
        Self { position, orientation }
    }

    pub fn from_position(position: Vector3) -> Self {
        Self::new(position, UnitQuaternion::IDENTITY)
    }

    /// Maps a point from this pose's local frame into the parent frame.
    #[inline]
    pub fn transform_point(&self, p: Vector3) -> Vector3 {
        self.position + self.orientation.rotate(p)
    }

    /// Maps a parent-frame point into this pose's local frame.
    #[inline]
    pub fn inverse_transform_point(&self, p: Vector3) -> Vector3 {
        self.orientation.inverse_rotate(p - self.position)
    }

    /// `self * other`: `other` expressed in the frame of `self`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose::new(
            self.transform_point(other.position),
            self.orientation * other.orientation,
        )
    }

    pub fn inverse(&self) -> Pose {
        let inv = self.orientation.inverse();
        Pose::new(-inv.rotate(self.position), inv)
    }

    /// 7 values: position xyz then quaternion wxyz.
    pub fn to_array(&self) -> [f64; 7] {
        let q = self.orientation.to_array();
        [
            self.position.x,
            self.position.y,
            self.position.z,
            q[0],
            q[1],
            q[2],
            q[3],
        ]
    }
}

/// Linear and angular velocity, both expressed in the inertial frame.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Twist {
    pub linear: Vector3,
    pub angular: Vector3,
}

impl Twist {
    pub const ZERO: Twist = Twist {
        linear: Vector3::ZERO,
        angular: Vector3::ZERO,
    };

    pub fn new(linear: Vector3, angular: Vector3) -> Self {
        Self { linear, angular }
    }

    pub fn is_finite(&self) -> bool {
        self.linear.is_finite() && self.angular.is_finite()
    }
}

/// Euler angles (extrinsic XYZ, radians) to a unit quaternion.
pub fn euler_to_quaternion(euler: Vector3) -> Result<UnitQuaternion, GeometryError> {
    UnitQuaternion::from_euler_xyz(euler)
}

/// Axis-angle vector of the relative rotation `a^-1 * b`, with the angle in
/// `[0, pi]`. Its norm is the geodesic distance between the two orientations.
pub fn rotation_vector_between(a: &UnitQuaternion, b: &UnitQuaternion) -> Vector3 {
    (a.inverse() * *b).to_rotation_vector()
}
