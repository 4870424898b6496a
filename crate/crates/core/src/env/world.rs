use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::config::EnvConfig;
use super::gripper::{default_gripper_shapes, gripper_hull, target_keypoints};
use super::reward::RewardBreakdown;
use super::EnvError;
use crate::geometry::{
    closest_distance, collect_contacts, rotation_vector_between, Contact, ConvexHull, Mat3,
    OrientedBox, Pose, ShapeSet, Twist, UnitQuaternion, Vector3,
};

/// Slot offsets of the observation vector.
pub mod layout {
    pub const GRIPPER_POSE: usize = 0;
    pub const GRIPPER_TWIST: usize = 7;
    pub const TARGET_POSE: usize = 13;
    pub const TARGET_TWIST: usize = 20;
    pub const GOAL_OFFSET: usize = 26;
    pub const GOAL_ROTATION: usize = 29;
    pub const RELATIVE_LINEAR: usize = 32;
    pub const RELATIVE_ANGULAR: usize = 35;
    pub const PALM_DISTANCE: usize = 38;
    pub const CONTACT_FORCE: usize = 39;
    pub const LEN: usize = 40;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateVector(pub [f64; layout::LEN]);

impl StateVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        layout::LEN
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn palm_distance(&self) -> f64 {
        self.0[layout::PALM_DISTANCE]
    }

    pub fn contact_force(&self) -> f64 {
        self.0[layout::CONTACT_FORCE]
    }

    fn put(&mut self, at: usize, values: &[f64]) {
        self.0[at..at + values.len()].copy_from_slice(values);
    }
}

/// Normalized gripper command: translation then rotation, each in [-1, 1].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionVector([f64; 6]);

impl ActionVector {
    pub const ZERO: ActionVector = ActionVector([0.0; 6]);

    pub fn new(values: &[f64]) -> Result<Self, EnvError> {
        if values.len() != 6 {
            return Err(EnvError::ActionShape {
                expected: 6,
                got: values.len(),
            });
        }
        let mut a = [0.0; 6];
        for (i, (dst, &v)) in a.iter_mut().zip(values).enumerate() {
            if !(-1.0..=1.0).contains(&v) {
                return Err(EnvError::ActionOutOfRange { index: i, value: v });
            }
            *dst = v;
        }
        Ok(Self(a))
    }

    pub fn as_array(&self) -> &[f64; 6] {
        &self.0
    }

    pub fn translation(&self) -> Vector3 {
        Vector3::new(self.0[0], self.0[1], self.0[2])
    }

    pub fn rotation(&self) -> Vector3 {
        Vector3::new(self.0[3], self.0[4], self.0[5])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub gripper_pose: Pose,
    pub gripper_twist: Twist,
    pub target_pose: Pose,
    pub target_twist: Twist,
    pub step_index: usize,
    /// Set once the episode has been truncated or terminated.
    pub finished: bool,
    pub seed: u64,
}

/// Uniformly distributed rotation.
pub fn random_orientation<R: Rng>(rng: &mut R) -> UnitQuaternion {
    loop {
        let w: f64 = rng.sample(StandardNormal);
        let x: f64 = rng.sample(StandardNormal);
        let y: f64 = rng.sample(StandardNormal);
        let z: f64 = rng.sample(StandardNormal);
        if let Ok(q) = UnitQuaternion::new_normalize(w, x, y, z) {
            return q;
        }
    }
}

/// Uniform sample from the ball of radius `radius`.
pub fn random_in_ball<R: Rng>(rng: &mut R, radius: f64) -> Vector3 {
    if radius == 0.0 {
        return Vector3::ZERO;
    }
    loop {
        let v = Vector3::new(
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
        );
        if v.norm_squared() <= 1.0 {
            return v * radius;
        }
    }
}

/// Moves the gripper by a normalized command expressed in its own frame.
pub fn apply_action(pose: &Pose, action: &ActionVector, config: &EnvConfig) -> Pose {
    let shift = pose
        .orientation
        .rotate(action.translation() * config.max_action_translation);
    let turn = UnitQuaternion::from_rotation_vector(action.rotation() * config.max_action_rotation);
    Pose::new(pose.position + shift, pose.orientation * turn)
}

/// Advances the free-floating target one step under the given contacts.
pub fn integrate_target(state: &WorldState, contacts: &[Contact], config: &EnvConfig) -> WorldState {
    let dt = config.dt;
    let pose = state.target_pose;
    let mut linear = state.target_twist.linear;
    let mut angular = state.target_twist.angular;
    if !contacts.is_empty() {
        let center = pose.position;
        let (force, torque) = contacts.iter().fold((Vector3::ZERO, Vector3::ZERO), |(f, t), c| {
            let fc = c.force();
            (f + fc, t + (c.point - center).cross(fc))
        });
        linear = linear + force * (dt / config.target_mass);
        let r = pose.orientation.to_matrix();
        let rt = r.transpose();
        let inertia = config.target_inertia();
        let body_inertia = Mat3::diagonal(inertia);
        let body_inverse = Mat3::diagonal(Vector3::new(1.0 / inertia.x, 1.0 / inertia.y, 1.0 / inertia.z));
        let momentum = r.mul_vec(body_inertia.mul_vec(rt.mul_vec(angular))) + torque * dt;
        angular = r.mul_vec(body_inverse.mul_vec(rt.mul_vec(momentum)));
    }
    WorldState {
        target_pose: Pose::new(
            pose.position + linear * dt,
            UnitQuaternion::from_rotation_vector(angular * dt) * pose.orientation,
        ),
        target_twist: Twist::new(linear, angular),
        ..*state
    }
}

/// Everything one transition produces.
#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub world: WorldState,
    pub observation: StateVector,
    pub reward: RewardBreakdown,
    pub contacts: Vec<Contact>,
    pub done: bool,
    pub truncated: bool,
}

/// Fixed geometry derived from an [`EnvConfig`]: gripper shapes and hull in
/// the gripper frame, keypoints in the target frame, and the grasp offset.
#[derive(Clone, Debug)]
pub struct GraspModel {
    config: EnvConfig,
    shapes: ShapeSet,
    hull: ConvexHull,
    keypoints: Vec<Vector3>,
    grasp_offset: Pose,
}

impl GraspModel {
    pub fn new(config: EnvConfig) -> Result<Self, EnvError> {
        config.validate()?;
        let shapes = default_gripper_shapes();
        let hull = gripper_hull(&shapes);
        let keypoints = target_keypoints(config.keypoints, config.box_half_extents);
        let grasp_offset = config.grasp_offset.to_pose()?;
        Ok(Self {
            config,
            shapes,
            hull,
            keypoints,
            grasp_offset,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn shapes(&self) -> &ShapeSet {
        &self.shapes
    }

    pub fn hull(&self) -> &ConvexHull {
        &self.hull
    }

    pub fn keypoints(&self) -> &[Vector3] {
        &self.keypoints
    }

    pub fn grasp_offset(&self) -> &Pose {
        &self.grasp_offset
    }

    pub fn target_box(&self, world: &WorldState) -> OrientedBox {
        OrientedBox {
            pose: world.target_pose,
            half_extents: self.config.box_half_extents,
        }
    }

    /// Pose the gripper should reach, in the world frame.
    pub fn goal_pose(&self, world: &WorldState) -> Pose {
        world.target_pose.compose(&self.grasp_offset)
    }

    pub fn reset(&self, seed: u64) -> (WorldState, StateVector) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = &self.config;
        let gripper_q = random_orientation(&mut rng);
        let mut pos = [0.0; 3];
        for (i, p) in pos.iter_mut().enumerate() {
            let (lo, hi) = (c.spawn_min[i], c.spawn_max[i]);
            *p = if lo == hi { lo } else { rng.random_range(lo..=hi) };
        }
        let target_q = random_orientation(&mut rng);
        let linear = random_in_ball(&mut rng, c.max_relative_speed);
        let angular = random_in_ball(&mut rng, c.max_angular_speed);
        let world = WorldState {
            gripper_pose: Pose::new(c.gripper_start, gripper_q),
            gripper_twist: Twist::ZERO,
            target_pose: Pose::new(Vector3::new(pos[0], pos[1], pos[2]), target_q),
            target_twist: Twist::new(linear, angular),
            step_index: 0,
            finished: false,
            seed,
        };
        let contacts = self.contacts(&world);
        let obs = self.assemble_observation(&world, &contacts);
        (world, obs)
    }

    /// Contacts that currently push on the target.
    pub fn contacts(&self, world: &WorldState) -> Vec<Contact> {
        let placed = self.shapes.transformed(&world.gripper_pose);
        let mut contacts = collect_contacts(
            &placed,
            &self.target_box(world),
            self.config.contact_stiffness,
            self.config.contact_damping,
            world.gripper_twist.linear - world.target_twist.linear,
        );
        // a separating damper can cancel the spring; such contacts exert nothing
        contacts.retain(|c| c.force_magnitude > 0.0);
        contacts
    }

    pub fn palm_distance(&self, world: &WorldState) -> f64 {
        let palm = self.shapes.palm();
        let placed = OrientedBox {
            pose: world.gripper_pose.compose(&palm.pose),
            half_extents: palm.half_extents,
        };
        closest_distance(&placed, &self.target_box(world))
    }

    pub fn assemble_observation(&self, world: &WorldState, contacts: &[Contact]) -> StateVector {
        let mut s = StateVector([0.0; layout::LEN]);
        let g = &world.gripper_pose;
        let goal = self.goal_pose(world);
        let twist = |t: &Twist| {
            let (l, a) = (t.linear.to_array(), t.angular.to_array());
            [l[0], l[1], l[2], a[0], a[1], a[2]]
        };
        s.put(layout::GRIPPER_POSE, &g.to_array());
        s.put(layout::GRIPPER_TWIST, &twist(&world.gripper_twist));
        s.put(layout::TARGET_POSE, &world.target_pose.to_array());
        s.put(layout::TARGET_TWIST, &twist(&world.target_twist));
        s.put(layout::GOAL_OFFSET, &(goal.position - g.position).to_array());
        let body_rotation = rotation_vector_between(&g.orientation, &goal.orientation);
        s.put(layout::GOAL_ROTATION, &g.orientation.rotate(body_rotation).to_array());
        s.put(
            layout::RELATIVE_LINEAR,
            &(world.target_twist.linear - world.gripper_twist.linear).to_array(),
        );
        s.put(
            layout::RELATIVE_ANGULAR,
            &(world.target_twist.angular - world.gripper_twist.angular).to_array(),
        );
        s.0[layout::PALM_DISTANCE] = self.palm_distance(world);
        s.0[layout::CONTACT_FORCE] = contacts.iter().fold(0.0, |acc, c| acc + c.force_magnitude);
        s
    }

    /// Whether keypoint `k` (target frame) lies in the gripper hull.
    pub fn keypoint_inside(&self, world: &WorldState, k: Vector3) -> bool {
        let p = world
            .gripper_pose
            .inverse_transform_point(world.target_pose.transform_point(k));
        self.hull.contains(p, self.config.hull_margin)
    }

    pub fn compute_reward(&self, world: &WorldState, contacts: &[Contact]) -> RewardBreakdown {
        let goal = self.goal_pose(world);
        let g = &world.gripper_pose;
        let distance = (goal.position - g.position).norm();
        let angle = (g.orientation.inverse() * goal.orientation).angle();
        let inside = self.keypoints.iter().any(|&k| self.keypoint_inside(world, k));
        let force: f64 = contacts.iter().fold(0.0, |acc, c| acc + c.force_magnitude);
        RewardBreakdown::new(distance, angle, inside, force)
    }

    pub fn step(&self, world: &WorldState, action: &ActionVector) -> Result<StepResult, EnvError> {
        let c = &self.config;
        if world.finished || world.step_index >= c.episode_length {
            return Err(EnvError::EpisodeFinished {
                step_index: world.step_index,
            });
        }
        let before = world.gripper_pose;
        let after = apply_action(&before, action, c);
        let body_turn = action.rotation() * c.max_action_rotation;
        let gripper_twist = Twist::new(
            (after.position - before.position) / c.dt,
            before.orientation.rotate(body_turn) / c.dt,
        );
        let moved = WorldState {
            gripper_pose: after,
            gripper_twist,
            ..*world
        };
        let contacts = self.contacts(&moved);
        let mut next = integrate_target(&moved, &contacts, c);
        let observation = self.assemble_observation(&next, &contacts);
        let reward = self.compute_reward(&next, &contacts);
        next.step_index += 1;
        let truncated = next.step_index >= c.episode_length;
        let done = (next.target_pose.position - c.gripper_start).norm() > c.workspace_radius;
        next.finished = truncated || done;
        Ok(StepResult {
            world: next,
            observation,
            reward,
            contacts,
            done,
            truncated,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> GraspModel {
        GraspModel::new(EnvConfig::default()).unwrap()
    }

    #[test]
    fn action_validation() {
        assert!(ActionVector::new(&[0.0; 5]).is_err());
        assert!(matches!(
            ActionVector::new(&[0.0, 0.0, 1.5, 0.0, 0.0, 0.0]),
            Err(EnvError::ActionOutOfRange { index: 2, .. })
        ));
        assert!(ActionVector::new(&[f64::NAN; 6]).is_err());
        assert!(ActionVector::new(&[1.0, -1.0, 0.0, 0.5, 0.0, 0.0]).is_ok());
    }

    #[test]
    fn unit_x_action_moves_ten_millimeters() {
        let a = ActionVector::new(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let p = apply_action(&Pose::IDENTITY, &a, &EnvConfig::default());
        assert!((p.position - Vector3::new(0.010, 0.0, 0.0)).norm() < 1e-15);
        assert_eq!(apply_action(&p, &ActionVector::ZERO, &EnvConfig::default()), p);
    }

    #[test]
    fn translation_is_in_gripper_frame() {
        let q = UnitQuaternion::from_axis_angle(Vector3::Z, std::f64::consts::FRAC_PI_2).unwrap();
        let a = ActionVector::new(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let p = apply_action(&Pose::new(Vector3::ZERO, q), &a, &EnvConfig::default());
        assert!((p.position - Vector3::new(0.0, 0.010, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn finished_episode_refuses_steps() {
        let m = GraspModel::new(EnvConfig {
            episode_length: 2,
            ..EnvConfig::default()
        })
        .unwrap();
        let (w, _) = m.reset(1);
        let r1 = m.step(&w, &ActionVector::ZERO).unwrap();
        assert!(!r1.truncated);
        let r2 = m.step(&r1.world, &ActionVector::ZERO).unwrap();
        assert!(r2.truncated);
        assert!(matches!(
            m.step(&r2.world, &ActionVector::ZERO),
            Err(EnvError::EpisodeFinished { step_index: 2 })
        ));
    }

    #[test]
    fn leaving_workspace_terminates() {
        let m = GraspModel::new(EnvConfig {
            workspace_radius: 0.5,
            ..EnvConfig::default()
        })
        .unwrap();
        let (mut w, _) = m.reset(4);
        w.target_pose.position = Vector3::new(0.0, 0.6, 1.0);
        w.target_twist = Twist::new(Vector3::new(0.0, 1.0, 0.0), Vector3::ZERO);
        let r = m.step(&w, &ActionVector::ZERO).unwrap();
        assert!(r.done && !r.truncated && r.world.finished);
    }

    #[test]
    fn reset_is_reproducible() {
        let m = model();
        assert_eq!(m.reset(11), m.reset(11));
        assert_ne!(m.reset(11).0, m.reset(12).0);
    }
}
