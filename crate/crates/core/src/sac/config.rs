use serde::{Deserialize, Serialize};

use super::SacError;

/// Which critics form the soft value target.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueTargetCritics {
    #[default]
    Online,
    Target,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainerConfig {
    pub gamma: f64,
    /// Weight kept by the target critics on each blend.
    pub tau: f64,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    /// Environment steps before the first gradient step.
    pub learning_starts: usize,
    /// Environment steps between update rounds.
    pub update_every: usize,
    /// Gradient steps per update round.
    pub gradient_steps: usize,
    pub hidden_widths: Vec<usize>,
    pub actor_lr_initial: f64,
    pub actor_lr_final: f64,
    pub critic_lr_initial: f64,
    pub critic_lr_final: f64,
    pub value_lr_initial: f64,
    pub value_lr_final: f64,
    pub alpha_lr: f64,
    pub initial_log_alpha: f64,
    /// Defaults to minus the action dimension.
    pub target_entropy: Option<f64>,
    pub value_target_critics: ValueTargetCritics,
    /// Std of the Gaussian noise added to executed actions during training.
    pub exploration_noise_std: f64,
    pub total_episodes: usize,
    /// Evaluate (and keep the best policy) every this many episodes; 0 disables.
    pub eval_every: usize,
    pub eval_episodes: usize,
    /// Episode length used for evaluation episodes; defaults to the
    /// environment's own.
    pub eval_episode_length: Option<usize>,
    pub seed: u64,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            tau: 0.995,
            buffer_capacity: 1_000_000,
            batch_size: 256,
            learning_starts: 1000,
            update_every: 1,
            gradient_steps: 1,
            hidden_widths: vec![256, 256],
            actor_lr_initial: 3e-4,
            actor_lr_final: 3e-5,
            critic_lr_initial: 3e-4,
            critic_lr_final: 3e-5,
            value_lr_initial: 3e-4,
            value_lr_final: 3e-5,
            alpha_lr: 3e-4,
            initial_log_alpha: 0.2f64.ln(),
            target_entropy: None,
            value_target_critics: ValueTargetCritics::Online,
            exploration_noise_std: 0.1,
            total_episodes: 40_000,
            eval_every: 40,
            eval_episodes: 5,
            eval_episode_length: None,
            seed: 0,
        }
    }
}

fn check(cond: bool, field: &str, msg: impl Into<String>) -> Result<(), SacError> {
    if cond {
        Ok(())
    } else {
        Err(SacError::InvalidConfig {
            field: field.to_string(),
            message: msg.into(),
        })
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<(), SacError> {
        check(self.gamma > 0.0 && self.gamma <= 1.0, "gamma", format!("must be in (0, 1], got {}", self.gamma))?;
        check((0.0..=1.0).contains(&self.tau), "tau", format!("must be in [0, 1], got {}", self.tau))?;
        check(self.buffer_capacity >= 1, "buffer_capacity", "must be at least 1")?;
        check(self.batch_size >= 1, "batch_size", "must be at least 1")?;
        check(
            self.batch_size <= self.buffer_capacity,
            "batch_size",
            format!("{} exceeds buffer_capacity {}", self.batch_size, self.buffer_capacity),
        )?;
        check(self.update_every >= 1, "update_every", "must be at least 1")?;
        check(!self.hidden_widths.is_empty(), "hidden_widths", "needs at least one hidden layer")?;
        check(self.hidden_widths.iter().all(|&w| w > 0), "hidden_widths", "widths must be > 0")?;
        for (name, v) in [
            ("actor_lr_initial", self.actor_lr_initial),
            ("actor_lr_final", self.actor_lr_final),
            ("critic_lr_initial", self.critic_lr_initial),
            ("critic_lr_final", self.critic_lr_final),
            ("value_lr_initial", self.value_lr_initial),
            ("value_lr_final", self.value_lr_final),
            ("alpha_lr", self.alpha_lr),
        ] {
            check(v > 0.0 && v.is_finite(), name, format!("must be > 0, got {v}"))?;
        }
        check(self.initial_log_alpha.is_finite(), "initial_log_alpha", "must be finite")?;
        if let Some(h) = self.target_entropy {
            check(h.is_finite(), "target_entropy", "must be finite")?;
        }
        check(
            self.exploration_noise_std >= 0.0 && self.exploration_noise_std.is_finite(),
            "exploration_noise_std",
            "must be >= 0",
        )?;
        check(self.total_episodes >= 1, "total_episodes", "must be at least 1")?;
        check(
            self.eval_every == 0 || self.eval_episodes >= 1,
            "eval_episodes",
            "must be at least 1 when evaluation is enabled",
        )?;
        if let Some(n) = self.eval_episode_length {
            check(n >= 1, "eval_episode_length", "must be at least 1")?;
        }
        Ok(())
    }

    pub fn target_entropy_for(&self, act_dim: usize) -> f64 {
        self.target_entropy.unwrap_or(-(act_dim as f64))
    }
}

/// `lr_initial + (lr_final - lr_initial) * step / total_steps`.
pub fn linear_lr(step: usize, total_steps: usize, lr_initial: f64, lr_final: f64) -> Result<f64, SacError> {
    if step > total_steps {
        return Err(SacError::InvalidArgument(format!(
            "schedule step {step} is past total {total_steps}"
        )));
    }
    if total_steps == 0 {
        return Ok(lr_initial);
    }
    let t = step as f64 / total_steps as f64;
    Ok(lr_initial * (1.0 - t) + lr_final * t)
}
