use serde::{Deserialize, Serialize};

use super::bundle::NetworksBundle;
use super::trainer::derive_seed;
use super::SacError;
use crate::env::{EnvConfig, Environment, GraspEnv, TrackingController};

const STREAM_EPISODE: u64 = 11;

/// Maps an observation to an action in [-1, 1]^act_dim.
pub trait Policy {
    fn act(&self, observation: &[f64]) -> Result<Vec<f64>, SacError>;
}

/// The actor's noise-free action `tanh(mean)`.
impl Policy for NetworksBundle {
    fn act(&self, observation: &[f64]) -> Result<Vec<f64>, SacError> {
        self.deterministic_action(observation)
    }
}

impl Policy for TrackingController {
    fn act(&self, observation: &[f64]) -> Result<Vec<f64>, SacError> {
        Ok(TrackingController::act(self, observation).as_array().to_vec())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mean_reward: f64,
    /// Population standard deviation of episode rewards.
    pub reward_std: f64,
    pub success_rate: f64,
    pub episodes: usize,
    /// Target speed cap in m/s, when the task has one.
    pub velocity_cap: Option<f64>,
}

/// Seed of evaluation episode `index` under base seed `seed`.
pub fn episode_seed(seed: u64, index: usize) -> u64 {
    derive_seed(seed, STREAM_EPISODE, index as u64)
}

/// Runs `n_episodes` noise-free episodes of `policy`.
pub fn evaluate_policy<P: Policy + ?Sized, E: Environment + ?Sized>(
    policy: &P,
    env: &mut E,
    n_episodes: usize,
    seed: u64,
    velocity_cap: Option<f64>,
) -> Result<EvalReport, SacError> {
    if n_episodes == 0 {
        return Err(SacError::InvalidArgument("need at least one evaluation episode".into()));
    }
    let mut rewards = Vec::with_capacity(n_episodes);
    let mut successes = 0usize;
    for i in 0..n_episodes {
        let mut obs = env.reset(episode_seed(seed, i));
        let mut total = 0.0;
        loop {
            let action = policy.act(&obs)?;
            let out = env.step(&action)?;
            total += out.reward;
            obs = out.observation;
            if out.done || out.truncated {
                successes += out.success as usize;
                break;
            }
        }
        rewards.push(total);
    }
    let n = n_episodes as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let var = rewards.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
    Ok(EvalReport {
        mean_reward: mean,
        reward_std: var.sqrt(),
        success_rate: successes as f64 / n,
        episodes: n_episodes,
        velocity_cap,
    })
}

/// Evaluates on the grasp task with the target speed capped at `velocity_cap`.
pub fn evaluate<P: Policy + ?Sized>(
    policy: &P,
    env_config: &EnvConfig,
    n_episodes: usize,
    velocity_cap: f64,
    seed: u64,
) -> Result<EvalReport, SacError> {
    let mut env = GraspEnv::new(env_config.with_velocity_cap(velocity_cap))?;
    evaluate_policy(policy, &mut env, n_episodes, seed, Some(velocity_cap))
}

/// One [`evaluate`] per cap, in input order, all from the same base seed.
pub fn velocity_sweep<P: Policy + ?Sized>(
    policy: &P,
    env_config: &EnvConfig,
    caps: &[f64],
    n_episodes: usize,
    seed: u64,
) -> Result<Vec<EvalReport>, SacError> {
    if caps.is_empty() {
        return Err(SacError::InvalidArgument("velocity sweep needs at least one cap".into()));
    }
    caps.iter()
        .map(|&cap| evaluate(policy, env_config, n_episodes, cap, seed))
        .collect()
}
