use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::buffer::{ReplayBuffer, Transition};
use super::bundle::{Architecture, NetworksBundle};
use super::config::{linear_lr, TrainerConfig};
use super::eval::{evaluate_policy, EvalReport};
use super::losses::{critic_loss_and_grads, policy_loss_and_grads, temperature_loss_and_grads, value_loss_and_grads};
use super::SacError;
use crate::env::{Environment, RewardBreakdown};
use crate::nn::policy::sample_squashed_action;
use crate::nn::{adam_update, GaussianPolicyOutput, Matrix};

const STREAM_INIT: u64 = 1;
const STREAM_EPISODE_ENV: u64 = 2;
const STREAM_EPISODE_RNG: u64 = 3;
const STREAM_EVAL: u64 = 4;

/// Mixes a base seed with a stream id and an index (splitmix64 finalizer).
pub fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Base seed of the fixed episode set used for in-training evaluation.
pub fn eval_seed(config: &TrainerConfig) -> u64 {
    derive_seed(config.seed, STREAM_EVAL, 0)
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    Matrix::from_vec(rows, cols, data).expect("sized")
}

/// Learning rates in effect for one episode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearningRates {
    pub actor: f64,
    pub critic: f64,
    pub value: f64,
    pub alpha: f64,
}

impl LearningRates {
    pub fn at_episode(config: &TrainerConfig, episode: usize) -> Self {
        let total = config.total_episodes;
        let step = episode.min(total);
        let lr = |a, b| linear_lr(step, total, a, b).expect("step clamped");
        Self {
            actor: lr(config.actor_lr_initial, config.actor_lr_final),
            critic: lr(config.critic_lr_initial, config.critic_lr_final),
            value: lr(config.value_lr_initial, config.value_lr_final),
            alpha: config.alpha_lr,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossSummary {
    pub value: f64,
    pub critic1: f64,
    pub critic2: f64,
    pub policy: f64,
    pub temperature: f64,
}

impl LossSummary {
    fn add(&mut self, o: &LossSummary) {
        self.value += o.value;
        self.critic1 += o.critic1;
        self.critic2 += o.critic2;
        self.policy += o.policy;
        self.temperature += o.temperature;
    }

    fn scaled(&self, k: f64) -> LossSummary {
        LossSummary {
            value: self.value * k,
            critic1: self.critic1 * k,
            critic2: self.critic2 * k,
            policy: self.policy * k,
            temperature: self.temperature * k,
        }
    }
}

/// What one training episode produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeStats {
    pub episode: usize,
    pub steps: usize,
    pub reward_total: f64,
    /// Summed reward terms, for tasks that report them.
    pub reward_terms: Option<RewardBreakdown>,
    pub success: bool,
    /// Temperature at the end of the episode.
    pub alpha: f64,
    /// Actor learning rate used during the episode.
    pub lr: f64,
    /// Mean losses over the episode's gradient steps, if any were taken.
    pub losses: Option<LossSummary>,
    pub gradient_steps: u64,
}

/// The best policy seen by periodic evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct BestPolicy {
    pub episode: usize,
    pub report: EvalReport,
    pub bundle: NetworksBundle,
}

impl BestPolicy {
    /// Higher success rate wins, then higher mean reward.
    pub fn beats(report: &EvalReport, incumbent: &EvalReport) -> bool {
        (report.success_rate, report.mean_reward) > (incumbent.success_rate, incumbent.mean_reward)
    }
}

/// Runs the soft actor-critic loop over an [`Environment`]. The trainer does
/// no I/O; callers drive it episode by episode.
pub struct Trainer<E: Environment> {
    config: TrainerConfig,
    env: E,
    eval_env: E,
    bundle: NetworksBundle,
    buffer: ReplayBuffer,
    next_episode: usize,
    env_steps: u64,
    gradient_steps: u64,
    target_entropy: f64,
    best: Option<BestPolicy>,
}

impl<E: Environment> Trainer<E> {
    pub fn new(env: E, eval_env: E, config: TrainerConfig) -> Result<Self, SacError> {
        config.validate()?;
        let arch = Architecture {
            obs_dim: env.observation_dim(),
            act_dim: env.action_dim(),
            hidden_widths: config.hidden_widths.clone(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, STREAM_INIT, 0));
        let bundle = NetworksBundle::new(arch, config.initial_log_alpha, &mut rng)?;
        Self::from_bundle(env, eval_env, config, bundle, 0)
    }

    /// Continues from a stored bundle at episode `next_episode`. The replay
    /// buffer starts empty.
    pub fn from_bundle(
        env: E,
        eval_env: E,
        config: TrainerConfig,
        bundle: NetworksBundle,
        next_episode: usize,
    ) -> Result<Self, SacError> {
        config.validate()?;
        let expected = Architecture {
            obs_dim: env.observation_dim(),
            act_dim: env.action_dim(),
            hidden_widths: config.hidden_widths.clone(),
        };
        if bundle.architecture != expected {
            return Err(SacError::Shape(format!(
                "bundle architecture {:?} does not match {:?}",
                bundle.architecture, expected
            )));
        }
        if eval_env.observation_dim() != expected.obs_dim || eval_env.action_dim() != expected.act_dim {
            return Err(SacError::Shape("evaluation environment dimensions differ".into()));
        }
        let target_entropy = config.target_entropy_for(expected.act_dim);
        Ok(Self {
            buffer: ReplayBuffer::new(config.buffer_capacity, expected.obs_dim, expected.act_dim),
            config,
            env,
            eval_env,
            bundle,
            next_episode,
            env_steps: 0,
            gradient_steps: 0,
            target_entropy,
            best: None,
        })
    }

    /// Restores the step counters of an interrupted run.
    pub fn set_counters(&mut self, env_steps: u64, gradient_steps: u64) {
        self.env_steps = env_steps;
        self.gradient_steps = gradient_steps;
    }

    pub fn gradient_steps(&self) -> u64 {
        self.gradient_steps
    }

    pub fn config(&self) -> &TrainerConfig {
        &self.config
    }

    pub fn bundle(&self) -> &NetworksBundle {
        &self.bundle
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn next_episode(&self) -> usize {
        self.next_episode
    }

    pub fn is_finished(&self) -> bool {
        self.next_episode >= self.config.total_episodes
    }

    pub fn best(&self) -> Option<&BestPolicy> {
        self.best.as_ref()
    }

    pub fn env_steps(&self) -> u64 {
        self.env_steps
    }

    /// Whether an evaluation is due after the episode just completed.
    pub fn evaluation_due(&self) -> bool {
        let every = self.config.eval_every;
        every > 0 && self.next_episode > 0 && self.next_episode % every == 0
    }

    /// Executed training action: a policy sample plus clipped exploration noise.
    fn exploration_action<R: Rng>(&self, observation: &[f64], rng: &mut R) -> Result<Vec<f64>, SacError> {
        let raw = self.bundle.actor.predict(&Matrix::row_vector(observation))?;
        let out = GaussianPolicyOutput::from_raw(raw.row(0))?;
        let xi: Vec<f64> = (0..out.dim()).map(|_| rng.sample(StandardNormal)).collect();
        let sample = sample_squashed_action(&out, &xi);
        let std = self.config.exploration_noise_std;
        Ok(sample
            .action
            .iter()
            .map(|a| {
                let eps: f64 = rng.sample(StandardNormal);
                (a + std * eps).clamp(-1.0, 1.0)
            })
            .collect())
    }

    /// One update of value, critics, actor, target critics and temperature,
    /// in that order.
    fn gradient_step<R: Rng>(&mut self, rng: &mut R, lr: &LearningRates) -> Result<LossSummary, SacError> {
        let cfg = &self.config;
        let batch = self.buffer.sample(cfg.batch_size, rng)?;
        let act_dim = self.bundle.architecture.act_dim;
        let n = batch.len();
        let alpha = self.bundle.alpha();
        let step = self.gradient_steps;
        let episode = self.next_episode;
        let finite = |what: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(SacError::NonFinite(format!(
                    "{what} is {v} at episode {episode}, gradient step {step}"
                )))
            }
        };

        let noise = gaussian_matrix(rng, n, act_dim);
        let value = value_loss_and_grads(&self.bundle, &batch.states, &noise, alpha, cfg.value_target_critics, false)?;
        finite("value loss", value.loss)?;
        let b = &mut self.bundle;
        adam_update(&mut b.value_opt, b.value.params_mut(), &value.grads.values, lr.value)?;

        let critics = critic_loss_and_grads(&self.bundle, &batch, cfg.gamma, false)?;
        finite("critic 1 loss", critics.critic1.loss)?;
        finite("critic 2 loss", critics.critic2.loss)?;
        let b = &mut self.bundle;
        adam_update(&mut b.critic1_opt, b.critic1.params_mut(), &critics.critic1.grads.values, lr.critic)?;
        adam_update(&mut b.critic2_opt, b.critic2.params_mut(), &critics.critic2.grads.values, lr.critic)?;

        let noise = gaussian_matrix(rng, n, act_dim);
        let policy = policy_loss_and_grads(&self.bundle, &batch.states, &noise, alpha, false)?;
        finite("policy loss", policy.loss)?;
        let b = &mut self.bundle;
        adam_update(&mut b.actor_opt, b.actor.params_mut(), &policy.grads.values, lr.actor)?;

        b.soft_update(cfg.tau)?;

        let temp = temperature_loss_and_grads(b.log_alpha, &policy.log_probs, self.target_entropy)?;
        finite("temperature loss", temp.loss)?;
        let mut log_alpha = [b.log_alpha];
        adam_update(&mut b.alpha_opt, &mut log_alpha, &[temp.grad_log_alpha], lr.alpha)?;
        b.log_alpha = log_alpha[0];
        finite("log alpha", b.log_alpha)?;

        self.gradient_steps += 1;
        Ok(LossSummary {
            value: value.loss,
            critic1: critics.critic1.loss,
            critic2: critics.critic2.loss,
            policy: policy.loss,
            temperature: temp.loss,
        })
    }

    /// Runs one training episode, updating the networks as it goes.
    pub fn run_episode(&mut self) -> Result<EpisodeStats, SacError> {
        let episode = self.next_episode;
        let seed = self.config.seed;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_EPISODE_RNG, episode as u64));
        let lr = LearningRates::at_episode(&self.config, episode);
        let mut obs = self.env.reset(derive_seed(seed, STREAM_EPISODE_ENV, episode as u64));
        let mut reward_total = 0.0;
        let mut terms: Option<RewardBreakdown> = None;
        let mut losses = LossSummary::default();
        let mut updates = 0u64;
        let mut steps = 0;
        let success = loop {
            let action = self.exploration_action(&obs, &mut rng)?;
            let out = self.env.step(&action)?;
            self.buffer.push(&Transition {
                state: obs,
                action,
                reward: out.reward,
                next_state: out.observation.clone(),
                done: out.done,
            })?;
            obs = out.observation;
            reward_total += out.reward;
            if let Some(t) = out.terms {
                terms.get_or_insert_with(RewardBreakdown::default).accumulate(&t);
            }
            steps += 1;
            self.env_steps += 1;
            let cfg = &self.config;
            if self.env_steps >= cfg.learning_starts as u64
                && self.buffer.len() >= cfg.batch_size
                && self.env_steps % cfg.update_every as u64 == 0
            {
                for _ in 0..cfg.gradient_steps {
                    losses.add(&self.gradient_step(&mut rng, &lr)?);
                    updates += 1;
                }
            }
            if out.done || out.truncated {
                break out.success;
            }
        };
        self.next_episode += 1;
        Ok(EpisodeStats {
            episode,
            steps,
            reward_total,
            reward_terms: terms,
            success,
            alpha: self.bundle.alpha(),
            lr: lr.actor,
            losses: (updates > 0).then(|| losses.scaled(1.0 / updates as f64)),
            gradient_steps: self.gradient_steps,
        })
    }

    /// Evaluates the current deterministic policy on the fixed evaluation
    /// episodes and keeps it if it beats the best so far. Returns the report
    /// and whether it became the new best.
    pub fn evaluate_and_track(&mut self) -> Result<(EvalReport, bool), SacError> {
        let report = evaluate_policy(
            &self.bundle,
            &mut self.eval_env,
            self.config.eval_episodes.max(1),
            eval_seed(&self.config),
            None,
        )?;
        let improved = match &self.best {
            None => true,
            Some(b) => BestPolicy::beats(&report, &b.report),
        };
        if improved {
            self.best = Some(BestPolicy {
                episode: self.next_episode,
                report: report.clone(),
                bundle: self.bundle.clone(),
            });
        }
        Ok((report, improved))
    }

    /// Runs episodes until `total_episodes`, evaluating on schedule.
    pub fn run(&mut self, mut on_episode: impl FnMut(&EpisodeStats)) -> Result<TrainReport, SacError> {
        let mut report = TrainReport::default();
        while !self.is_finished() {
            let stats = self.run_episode()?;
            on_episode(&stats);
            report.episodes.push(stats);
            if self.evaluation_due() {
                let (eval, _) = self.evaluate_and_track()?;
                report.evaluations.push((self.next_episode, eval));
            }
        }
        Ok(report)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainReport {
    pub episodes: Vec<EpisodeStats>,
    /// (episodes completed, report) for every periodic evaluation.
    pub evaluations: Vec<(usize, EvalReport)>,
}
