use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SacError;
use crate::nn::{GaussianPolicyOutput, Matrix, Network, OptimizerState};

/// Network shapes shared by every member of a [`NetworksBundle`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub obs_dim: usize,
    pub act_dim: usize,
    pub hidden_widths: Vec<usize>,
}

impl Architecture {
    fn widths(&self, input: usize, output: usize) -> Vec<usize> {
        let mut w = vec![input];
        w.extend(&self.hidden_widths);
        w.push(output);
        w
    }

    /// Observation to mean and log-std.
    pub fn actor_widths(&self) -> Vec<usize> {
        self.widths(self.obs_dim, 2 * self.act_dim)
    }

    /// Observation and action to a scalar.
    pub fn critic_widths(&self) -> Vec<usize> {
        self.widths(self.obs_dim + self.act_dim, 1)
    }

    pub fn value_widths(&self) -> Vec<usize> {
        self.widths(self.obs_dim, 1)
    }
}

/// Every trainable quantity of the agent and its optimizer state.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworksBundle {
    pub architecture: Architecture,
    pub actor: Network,
    pub critic1: Network,
    pub critic2: Network,
    pub target_critic1: Network,
    pub target_critic2: Network,
    pub value: Network,
    pub log_alpha: f64,
    pub actor_opt: OptimizerState,
    pub critic1_opt: OptimizerState,
    pub critic2_opt: OptimizerState,
    pub value_opt: OptimizerState,
    pub alpha_opt: OptimizerState,
}

impl NetworksBundle {
    pub fn new<R: Rng + ?Sized>(architecture: Architecture, initial_log_alpha: f64, rng: &mut R) -> Result<Self, SacError> {
        let actor = Network::init(&architecture.actor_widths(), 1e-2, rng)?;
        let critic1 = Network::init(&architecture.critic_widths(), 1.0, rng)?;
        let critic2 = Network::init(&architecture.critic_widths(), 1.0, rng)?;
        let value = Network::init(&architecture.value_widths(), 1.0, rng)?;
        Ok(Self::assemble(architecture, actor, critic1, critic2, value, initial_log_alpha))
    }

    /// All-zero parameters and fresh optimizer state, for filling from storage.
    pub fn zeros(architecture: Architecture) -> Result<Self, SacError> {
        let actor = Network::zeros(&architecture.actor_widths())?;
        let critic1 = Network::zeros(&architecture.critic_widths())?;
        let critic2 = critic1.clone();
        let value = Network::zeros(&architecture.value_widths())?;
        Ok(Self::assemble(architecture, actor, critic1, critic2, value, 0.0))
    }

    fn assemble(
        architecture: Architecture,
        actor: Network,
        critic1: Network,
        critic2: Network,
        value: Network,
        log_alpha: f64,
    ) -> Self {
        Self {
            actor_opt: OptimizerState::new(actor.num_params()),
            critic1_opt: OptimizerState::new(critic1.num_params()),
            critic2_opt: OptimizerState::new(critic2.num_params()),
            value_opt: OptimizerState::new(value.num_params()),
            alpha_opt: OptimizerState::new(1),
            target_critic1: critic1.clone(),
            target_critic2: critic2.clone(),
            architecture,
            actor,
            critic1,
            critic2,
            value,
            log_alpha,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.log_alpha.exp()
    }

    /// `target <- tau * target + (1 - tau) * online` for both critics.
    pub fn soft_update(&mut self, tau: f64) -> Result<(), SacError> {
        soft_update(&mut self.target_critic1, &self.critic1, tau)?;
        soft_update(&mut self.target_critic2, &self.critic2, tau)
    }

    /// Policy head outputs for a batch of observations.
    pub fn policy_outputs(&self, states: &Matrix) -> Result<Vec<GaussianPolicyOutput>, SacError> {
        let raw = self.actor.predict(states)?;
        Ok(crate::nn::policy::split_policy_batch(&raw)?)
    }

    /// Noise-free action `tanh(mean)` for one observation.
    pub fn deterministic_action(&self, observation: &[f64]) -> Result<Vec<f64>, SacError> {
        let outs = self.policy_outputs(&Matrix::row_vector(observation))?;
        Ok(outs[0].deterministic_action())
    }

    pub fn is_finite(&self) -> bool {
        self.actor.is_finite()
            && self.critic1.is_finite()
            && self.critic2.is_finite()
            && self.target_critic1.is_finite()
            && self.target_critic2.is_finite()
            && self.value.is_finite()
            && self.log_alpha.is_finite()
    }
}

/// `target <- tau * target + (1 - tau) * online`.
pub fn soft_update(target: &mut Network, online: &Network, tau: f64) -> Result<(), SacError> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(SacError::InvalidArgument(format!("tau must be in [0, 1], got {tau}")));
    }
    target.blend_from(online, tau)?;
    Ok(())
}
