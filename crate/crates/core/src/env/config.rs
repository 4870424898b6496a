use serde::{Deserialize, Serialize};

use super::EnvError;
use crate::geometry::{euler_to_quaternion, solid_cuboid_inertia, Pose, Vector3};

/// Which target points count for the hull-containment reward.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeypointRule {
    /// 8 box corners plus the center.
    CornersAndCenter,
    Corners,
    Center,
}

/// Pose given as a position and extrinsic-XYZ Euler angles, as it appears in
/// run configuration files.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EulerPose {
    pub position: Vector3,
    #[serde(default)]
    pub euler_xyz: Vector3,
}

impl EulerPose {
    pub fn to_pose(&self) -> Result<Pose, EnvError> {
        let q = euler_to_quaternion(self.euler_xyz)
            .map_err(|e| EnvError::invalid("grasp_offset.euler_xyz", e.to_string()))?;
        Ok(Pose::new(self.position, q))
    }
}

/// Pre-grasp environment parameters. Lengths in meters, times in seconds,
/// angles in radians, mass in kilograms, forces in newtons.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub dt: f64,
    pub episode_length: usize,
    pub box_half_extents: Vector3,
    pub target_mass: f64,
    /// Translation per step at full action, in the gripper frame.
    pub max_action_translation: f64,
    /// Rotation per step and axis at full action, in the gripper frame.
    pub max_action_rotation: f64,
    /// Radius of the ball the initial target velocity is drawn from.
    pub max_relative_speed: f64,
    /// Radius of the ball the initial target angular velocity is drawn from.
    pub max_angular_speed: f64,
    pub keypoints: KeypointRule,
    /// Hull containment tolerance for keypoints.
    pub hull_margin: f64,
    pub contact_stiffness: f64,
    pub contact_damping: f64,
    pub spawn_min: Vector3,
    pub spawn_max: Vector3,
    pub gripper_start: Vector3,
    /// Gripper goal pose expressed in the target frame.
    pub grasp_offset: EulerPose,
    /// Episode terminates when the target center is farther than this from
    /// `gripper_start`.
    pub workspace_radius: f64,
    pub success_threshold: f64,
    pub success_run: usize,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            dt: 0.02,
            episode_length: 500,
            box_half_extents: Vector3::new(0.1, 0.1, 0.02),
            target_mass: 0.5,
            max_action_translation: 0.010,
            max_action_rotation: 0.1,
            max_relative_speed: 0.4,
            max_angular_speed: 0.0,
            keypoints: KeypointRule::CornersAndCenter,
            hull_margin: 0.0,
            contact_stiffness: 1000.0,
            contact_damping: 10.0,
            spawn_min: Vector3::new(-0.35, 0.55, 0.85),
            spawn_max: Vector3::new(0.35, 0.85, 1.25),
            gripper_start: Vector3::new(0.0, 0.0, 1.0),
            grasp_offset: EulerPose {
                position: Vector3::new(0.0, 0.0, -0.085),
                euler_xyz: Vector3::ZERO,
            },
            workspace_radius: 3.0,
            success_threshold: 2.0,
            success_run: 200,
        }
    }
}

fn check(cond: bool, field: &str, msg: impl Into<String>) -> Result<(), EnvError> {
    if cond {
        Ok(())
    } else {
        Err(EnvError::invalid(field, msg))
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<(), EnvError> {
        let finite_vec = |v: Vector3, f: &str| check(v.is_finite(), f, "must be finite");
        check(self.dt > 0.0 && self.dt.is_finite(), "dt", format!("must be > 0, got {}", self.dt))?;
        check(self.episode_length >= 1, "episode_length", "must be at least 1")?;
        finite_vec(self.box_half_extents, "box_half_extents")?;
        check(
            self.box_half_extents.min_component() > 0.0,
            "box_half_extents",
            "all half-extents must be > 0",
        )?;
        check(
            self.target_mass > 0.0 && self.target_mass.is_finite(),
            "target_mass",
            format!("must be > 0, got {}", self.target_mass),
        )?;
        check(self.max_action_translation > 0.0, "max_action_translation", "must be > 0")?;
        check(self.max_action_rotation > 0.0, "max_action_rotation", "must be > 0")?;
        check(
            self.max_relative_speed >= 0.0 && self.max_relative_speed.is_finite(),
            "max_relative_speed",
            format!("must be >= 0, got {}", self.max_relative_speed),
        )?;
        check(self.max_angular_speed >= 0.0, "max_angular_speed", "must be >= 0")?;
        check(self.hull_margin >= 0.0, "hull_margin", "must be >= 0")?;
        check(self.contact_stiffness >= 0.0, "contact_stiffness", "must be >= 0")?;
        check(self.contact_damping >= 0.0, "contact_damping", "must be >= 0")?;
        finite_vec(self.spawn_min, "spawn_min")?;
        finite_vec(self.spawn_max, "spawn_max")?;
        finite_vec(self.gripper_start, "gripper_start")?;
        for (axis, (lo, hi)) in ["x", "y", "z"]
            .iter()
            .zip(self.spawn_min.to_array().into_iter().zip(self.spawn_max.to_array()))
        {
            check(
                lo <= hi,
                "spawn_min",
                format!("spawn region is empty along {axis}: {lo} > {hi}"),
            )?;
        }
        finite_vec(self.grasp_offset.position, "grasp_offset.position")?;
        self.grasp_offset.to_pose()?;
        check(self.workspace_radius > 0.0, "workspace_radius", "must be > 0")?;
        check(self.success_threshold.is_finite(), "success_threshold", "must be finite")?;
        check(self.success_run >= 1, "success_run", "must be at least 1")?;
        Ok(())
    }

    /// Principal moments of inertia of the target (solid cuboid).
    pub fn target_inertia(&self) -> Vector3 {
        solid_cuboid_inertia(self.target_mass, self.box_half_extents)
    }

    pub fn with_velocity_cap(&self, cap: f64) -> Self {
        Self {
            max_relative_speed: cap,
            ..self.clone()
        }
    }
}
