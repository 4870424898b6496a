//! The pre-grasp tracking task: a kinematic gripper chasing a free-floating
//! box, plus a small point-mass task for trainer sanity checks.

mod config;
mod gripper;
mod point_mass;
mod reward;
mod scripted;
mod world;

pub use config::{EnvConfig, EulerPose, KeypointRule};
pub use gripper::{default_gripper_shapes, gripper_hull, target_keypoints, PALM_HALF_EXTENTS};
pub use point_mass::{PointMassConfig, PointMassEnv};
pub use reward::{update_success, RewardBreakdown, SuccessTracker};
pub use scripted::TrackingController;
pub use world::{
    apply_action, integrate_target, layout, random_in_ball, random_orientation, ActionVector,
    GraspModel, StateVector, StepResult, WorldState,
};

use thiserror::Error;

use crate::geometry::Contact;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvError {
    #[error("invalid config field `{field}`: {message}")]
    InvalidConfig { field: String, message: String },
    #[error("action component {index} is {value}, outside [-1, 1]")]
    ActionOutOfRange { index: usize, value: f64 },
    #[error("action has {got} components, expected {expected}")]
    ActionShape { expected: usize, got: usize },
    #[error("episode already finished at step {step_index}; call reset")]
    EpisodeFinished { step_index: usize },
}

impl EnvError {
    pub fn invalid(field: &str, message: impl Into<String>) -> Self {
        EnvError::InvalidConfig {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub observation: Vec<f64>,
    pub reward: f64,
    /// Per-term rewards, for tasks that have them.
    pub terms: Option<RewardBreakdown>,
    /// Terminated early; the next state is not bootstrapped.
    pub done: bool,
    /// Hit the episode length.
    pub truncated: bool,
    /// Episode has met its success condition (latched).
    pub success: bool,
}

/// Episodic task with box-bounded actions in [-1, 1].
pub trait Environment {
    fn observation_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    fn episode_length(&self) -> usize;
    fn reset(&mut self, seed: u64) -> Vec<f64>;
    fn step(&mut self, action: &[f64]) -> Result<StepOutcome, EnvError>;
}

/// Stateful wrapper over [`GraspModel`] that tracks the current world and
/// episode success.
#[derive(Clone, Debug)]
pub struct GraspEnv {
    model: GraspModel,
    world: WorldState,
    tracker: SuccessTracker,
    contacts: Vec<Contact>,
}

impl GraspEnv {
    pub fn new(config: EnvConfig) -> Result<Self, EnvError> {
        let model = GraspModel::new(config)?;
        let (mut world, _) = model.reset(0);
        world.finished = true;
        let tracker = SuccessTracker::new(model.config().success_threshold, model.config().success_run);
        Ok(Self {
            model,
            world,
            tracker,
            contacts: Vec::new(),
        })
    }

    pub fn model(&self) -> &GraspModel {
        &self.model
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn tracker(&self) -> &SuccessTracker {
        &self.tracker
    }

    /// Contacts resolved during the last step.
    pub fn contacts(&self) -> &[Contact] {
        &self.contacts
    }

    /// Steps with a validated action and returns the full transition.
    pub fn step_detailed(&mut self, action: &ActionVector) -> Result<StepResult, EnvError> {
        let result = self.model.step(&self.world, action)?;
        self.world = result.world;
        self.tracker.update(result.reward.total);
        self.contacts.clone_from(&result.contacts);
        Ok(result)
    }
}

impl Environment for GraspEnv {
    fn observation_dim(&self) -> usize {
        layout::LEN
    }

    fn action_dim(&self) -> usize {
        6
    }

    fn episode_length(&self) -> usize {
        self.model.config().episode_length
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let (world, obs) = self.model.reset(seed);
        self.world = world;
        self.tracker = SuccessTracker::new(self.tracker.threshold, self.tracker.required_run);
        self.contacts.clear();
        obs.as_slice().to_vec()
    }

    fn step(&mut self, action: &[f64]) -> Result<StepOutcome, EnvError> {
        let action = ActionVector::new(action)?;
        let r = self.step_detailed(&action)?;
        Ok(StepOutcome {
            observation: r.observation.as_slice().to_vec(),
            reward: r.reward.total,
            terms: Some(r.reward),
            done: r.done,
            truncated: r.truncated,
            success: self.tracker.succeeded,
        })
    }
}
