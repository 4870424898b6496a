use std::path::Path;

use pregrasp::env::{layout, ActionVector, EnvConfig, Environment, GraspEnv};
use pregrasp::sac::Policy;
use serde::{Deserialize, Serialize};

use crate::HarnessError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceReward {
    pub rd: f64,
    pub rtheta: f64,
    pub rtop: f64,
    pub pf: f64,
    pub total: f64,
}

/// State after one step. Poses are position xyz then quaternion wxyz.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: usize,
    pub gripper_pose: [f64; 7],
    pub target_pose: [f64; 7],
    /// Closest palm-to-target distance, m.
    pub d: f64,
    /// Summed contact force, N.
    pub f_n: f64,
    pub action: [f64; 6],
    pub reward: TraceReward,
}

/// Runs one noise-free episode and records every step.
pub fn record_episode<P: Policy + ?Sized>(
    policy: &P,
    env_config: &EnvConfig,
    seed: u64,
) -> Result<Vec<TraceRecord>, HarnessError> {
    let mut env = GraspEnv::new(env_config.clone())?;
    let mut obs = env.reset(seed);
    let mut out = Vec::with_capacity(env_config.episode_length);
    loop {
        let raw = policy.act(&obs)?;
        let action = ActionVector::new(&raw)?;
        let r = env.step_detailed(&action)?;
        out.push(TraceRecord {
            step: out.len(),
            gripper_pose: r.world.gripper_pose.to_array(),
            target_pose: r.world.target_pose.to_array(),
            d: r.observation.0[layout::PALM_DISTANCE],
            f_n: r.observation.0[layout::CONTACT_FORCE],
            action: *action.as_array(),
            reward: TraceReward {
                rd: r.reward.r_d,
                rtheta: r.reward.r_theta,
                rtop: r.reward.r_top,
                pf: r.reward.p_f,
                total: r.reward.total,
            },
        });
        obs = r.observation.0.to_vec();
        if r.done || r.truncated {
            return Ok(out);
        }
    }
}

pub fn write_trace(trace: &[TraceRecord], path: &Path) -> Result<(), HarnessError> {
    let text = serde_json::to_string_pretty(trace).expect("trace serializes");
    std::fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRecord>, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| HarnessError::corrupt(format!("{}: {e}", path.display())))
}
