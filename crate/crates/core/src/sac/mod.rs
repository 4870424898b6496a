//! Soft actor-critic with a soft value network, twin critics with target
//! copies, and automatic entropy temperature.

mod buffer;
mod bundle;
mod config;
mod eval;
pub mod gradcheck;
pub mod losses;
mod trainer;

pub use buffer::{Batch, ReplayBuffer, Transition};
pub use bundle::{soft_update, Architecture, NetworksBundle};
pub use config::{linear_lr, TrainerConfig, ValueTargetCritics};
pub use eval::{episode_seed, evaluate, evaluate_policy, velocity_sweep, EvalReport, Policy};
pub use losses::{
    critic_loss_and_grads, policy_loss_and_grads, temperature_loss_and_grads, value_loss_and_grads,
};
pub use trainer::{
    derive_seed, eval_seed, gaussian_matrix, BestPolicy, EpisodeStats, LearningRates, LossSummary,
    TrainReport, Trainer,
};

use thiserror::Error;

use crate::env::{EnvConfig, EnvError, GraspEnv};
use crate::nn::NnError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SacError {
    #[error("invalid trainer config field `{field}`: {message}")]
    InvalidConfig { field: String, message: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("cannot sample {requested} transitions from a buffer holding {available}")]
    InsufficientData { requested: usize, available: usize },
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Nn(#[from] NnError),
}

/// Training and evaluation environments for the grasp task. Evaluation
/// episodes use `eval_episode_length` when set.
pub fn grasp_envs(env_config: &EnvConfig, trainer_config: &TrainerConfig) -> Result<(GraspEnv, GraspEnv), SacError> {
    let train = GraspEnv::new(env_config.clone())?;
    let eval_config = EnvConfig {
        episode_length: trainer_config.eval_episode_length.unwrap_or(env_config.episode_length),
        ..env_config.clone()
    };
    Ok((train, GraspEnv::new(eval_config)?))
}

/// Full training run on the grasp task.
pub fn train(env_config: &EnvConfig, trainer_config: &TrainerConfig) -> Result<(TrainReport, Trainer<GraspEnv>), SacError> {
    let (env, eval_env) = grasp_envs(env_config, trainer_config)?;
    let mut trainer = Trainer::new(env, eval_env, trainer_config.clone())?;
    let report = trainer.run(|_| {})?;
    Ok((report, trainer))
}
