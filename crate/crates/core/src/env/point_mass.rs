//! One-dimensional point-mass reach task used to sanity-check the trainer
//! independently of the grasp simulation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{EnvError, Environment, StepOutcome};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PointMassConfig {
    pub dt: f64,
    pub episode_length: usize,
    /// Acceleration at full action.
    pub max_acceleration: f64,
    /// Linear drag coefficient (1/s).
    pub drag: f64,
    /// Start and goal positions are drawn from [-range, range].
    pub range: f64,
    pub goal_tolerance: f64,
    pub speed_tolerance: f64,
}

impl Default for PointMassConfig {
    fn default() -> Self {
        Self {
            dt: 0.1,
            episode_length: 50,
            max_acceleration: 2.0,
            drag: 1.0,
            range: 1.0,
            goal_tolerance: 0.1,
            speed_tolerance: 0.2,
        }
    }
}

/// Observation `[position, velocity, goal - position]`; reward is the
/// negative distance to the goal. An episode succeeds when the mass ends
/// within `goal_tolerance` of the goal moving slower than `speed_tolerance`.
#[derive(Clone, Debug)]
pub struct PointMassEnv {
    config: PointMassConfig,
    position: f64,
    velocity: f64,
    goal: f64,
    step_index: usize,
    finished: bool,
}

impl PointMassEnv {
    pub fn new(config: PointMassConfig) -> Result<Self, EnvError> {
        if !(config.dt > 0.0) {
            return Err(EnvError::invalid("dt", "must be > 0"));
        }
        if config.episode_length == 0 {
            return Err(EnvError::invalid("episode_length", "must be at least 1"));
        }
        if !(config.range > 0.0) {
            return Err(EnvError::invalid("range", "must be > 0"));
        }
        Ok(Self {
            config,
            position: 0.0,
            velocity: 0.0,
            goal: 0.0,
            step_index: 0,
            finished: true,
        })
    }

    fn observation(&self) -> Vec<f64> {
        vec![self.position, self.velocity, self.goal - self.position]
    }

    fn on_goal(&self) -> bool {
        (self.goal - self.position).abs() < self.config.goal_tolerance
            && self.velocity.abs() < self.config.speed_tolerance
    }
}

impl Environment for PointMassEnv {
    fn observation_dim(&self) -> usize {
        3
    }

    fn action_dim(&self) -> usize {
        1
    }

    fn episode_length(&self) -> usize {
        self.config.episode_length
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = self.config.range;
        self.position = rng.random_range(-r..=r);
        self.goal = rng.random_range(-r..=r);
        self.velocity = 0.0;
        self.step_index = 0;
        self.finished = false;
        self.observation()
    }

    fn step(&mut self, action: &[f64]) -> Result<StepOutcome, EnvError> {
        if self.finished {
            return Err(EnvError::EpisodeFinished {
                step_index: self.step_index,
            });
        }
        let a = match action {
            [a] if (-1.0..=1.0).contains(a) => *a,
            [a] => return Err(EnvError::ActionOutOfRange { index: 0, value: *a }),
            _ => {
                return Err(EnvError::ActionShape {
                    expected: 1,
                    got: action.len(),
                })
            }
        };
        let c = &self.config;
        self.velocity += (a * c.max_acceleration - c.drag * self.velocity) * c.dt;
        self.position += self.velocity * c.dt;
        self.step_index += 1;
        let truncated = self.step_index >= c.episode_length;
        self.finished = truncated;
        Ok(StepOutcome {
            observation: self.observation(),
            reward: -(self.goal - self.position).abs(),
            terms: None,
            done: false,
            truncated,
            success: truncated && self.on_goal(),
        })
    }
}
