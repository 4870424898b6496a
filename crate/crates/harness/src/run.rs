use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use pregrasp::env::{layout, GraspEnv};
use pregrasp::sac::{grasp_envs, Architecture, BestPolicy, EvalReport, NetworksBundle, Trainer};

use crate::checkpoint::{load_checkpoint, load_checkpoint_as, save_checkpoint, CheckpointMeta};
use crate::config::RunConfig;
use crate::metrics::{read_metrics, write_metrics, MetricsRow, MetricsWriter};
use crate::HarnessError;

pub const METRICS_FILE: &str = "metrics.csv";
pub const EVALUATIONS_FILE: &str = "evaluations.csv";
pub const CONFIG_FILE: &str = "config.json";
pub const CHECKPOINT_DIR: &str = "checkpoints";
pub const LATEST_CHECKPOINT: &str = "latest.json";
pub const BEST_CHECKPOINT: &str = "best.json";

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub run_dir: PathBuf,
    pub first_episode: usize,
    pub next_episode: usize,
    /// Episode count and report of the best evaluation on record.
    pub best: Option<(usize, EvalReport)>,
}

fn architecture(config: &RunConfig) -> Architecture {
    Architecture {
        obs_dim: layout::LEN,
        act_dim: 6,
        hidden_widths: config.trainer.hidden_widths.clone(),
    }
}

fn meta_for(config: &RunConfig, trainer: &Trainer<GraspEnv>, evaluation: Option<EvalReport>) -> CheckpointMeta {
    CheckpointMeta {
        seed: config.trainer.seed,
        episode: trainer.next_episode(),
        env_steps: trainer.env_steps(),
        gradient_steps: trainer.gradient_steps(),
        config_digest: config.digest(),
        architecture: trainer.bundle().architecture.clone(),
        env: config.env.clone(),
        trainer: config.trainer.clone(),
        evaluation,
        created_by: concat!("pregrasp ", env!("CARGO_PKG_VERSION")).to_string(),
    }
}

fn prepare_resume(config: &RunConfig, path: &Path) -> Result<(NetworksBundle, CheckpointMeta), HarnessError> {
    let (bundle, meta) = load_checkpoint_as(path, &architecture(config))?;
    let digest = config.digest();
    if meta.config_digest != digest {
        return Err(HarnessError::DigestMismatch {
            checkpoint: meta.config_digest,
            config: digest,
        });
    }
    if meta.episode > config.trainer.total_episodes {
        return Err(HarnessError::InvalidArgument(format!(
            "checkpoint is at episode {}, past total_episodes {}",
            meta.episode, config.trainer.total_episodes
        )));
    }
    Ok((bundle, meta))
}

/// Trains under `config`, writing metrics, evaluations and checkpoints into
/// the run directory. With `resume`, continues from that checkpoint's
/// episode with an empty replay buffer. Nothing is written unless the config
/// and checkpoint are valid.
pub fn train_run(
    config: &RunConfig,
    resume: Option<&Path>,
    mut log: impl FnMut(&str),
) -> Result<RunOutcome, HarnessError> {
    config.validate()?;
    let resumed = resume.map(|p| prepare_resume(config, p)).transpose()?;
    let (env, eval_env) = grasp_envs(&config.env, &config.trainer)?;

    let run_dir = config.run_dir();
    let ckpt_dir = run_dir.join(CHECKPOINT_DIR);
    std::fs::create_dir_all(&ckpt_dir).map_err(|e| HarnessError::io(&ckpt_dir, e))?;
    let config_path = run_dir.join(CONFIG_FILE);
    std::fs::write(&config_path, serde_json::to_string_pretty(config).expect("config serializes"))
        .map_err(|e| HarnessError::io(&config_path, e))?;

    let metrics_path = run_dir.join(METRICS_FILE);
    let evals_path = run_dir.join(EVALUATIONS_FILE);
    let best_path = ckpt_dir.join(BEST_CHECKPOINT);
    let (mut trainer, mut metrics, mut best) = match resumed {
        Some((bundle, meta)) => {
            let mut t = Trainer::from_bundle(env, eval_env, config.trainer.clone(), bundle, meta.episode)?;
            t.set_counters(meta.env_steps, meta.gradient_steps);
            // rows written after the checkpoint are replayed by this run
            if metrics_path.exists() {
                let kept: Vec<MetricsRow> = read_metrics(&metrics_path)?
                    .into_iter()
                    .filter(|r| r.episode < meta.episode)
                    .collect();
                write_metrics(&kept, &metrics_path)?;
            }
            let best = match load_checkpoint(&best_path) {
                Ok((_, m)) => m.evaluation.map(|r| (m.episode, r)),
                Err(_) => None,
            };
            (t, MetricsWriter::append(&metrics_path)?, best)
        }
        None => {
            let t = Trainer::new(env, eval_env, config.trainer.clone())?;
            let w = MetricsWriter::create(&metrics_path)?;
            std::fs::write(&evals_path, "episode,mean_reward,reward_std,success_rate\n")
                .map_err(|e| HarnessError::io(&evals_path, e))?;
            (t, w, None)
        }
    };
    let first_episode = trainer.next_episode();
    let start = Instant::now();
    while !trainer.is_finished() {
        let stats = trainer.run_episode()?;
        let wall = if config.output.deterministic {
            0.0
        } else {
            start.elapsed().as_secs_f64()
        };
        metrics.write(&MetricsRow::from_stats(&stats, wall))?;
        if trainer.evaluation_due() {
            let (report, _) = trainer.evaluate_and_track()?;
            let mut evals = std::fs::OpenOptions::new()
                .append(true)
                .create(true)
                .open(&evals_path)
                .map_err(|e| HarnessError::io(&evals_path, e))?;
            writeln!(
                evals,
                "{},{},{},{}",
                trainer.next_episode(),
                report.mean_reward,
                report.reward_std,
                report.success_rate
            )
            .map_err(|e| HarnessError::io(&evals_path, e))?;
            let improved = best.as_ref().is_none_or(|(_, b)| BestPolicy::beats(&report, b));
            if improved {
                save_checkpoint(trainer.bundle(), &meta_for(config, &trainer, Some(report.clone())), &best_path)?;
                best = Some((trainer.next_episode(), report.clone()));
            }
            save_checkpoint(
                trainer.bundle(),
                &meta_for(config, &trainer, None),
                &ckpt_dir.join(LATEST_CHECKPOINT),
            )?;
            log(&format!(
                "episode {:>6}  eval success {:.2}  mean reward {:8.2}  alpha {:.4}{}",
                trainer.next_episode(),
                report.success_rate,
                report.mean_reward,
                stats.alpha,
                if improved { "  (best)" } else { "" }
            ));
        }
    }
    save_checkpoint(
        trainer.bundle(),
        &meta_for(config, &trainer, None),
        &ckpt_dir.join(LATEST_CHECKPOINT),
    )?;
    Ok(RunOutcome {
        run_dir,
        first_episode,
        next_episode: trainer.next_episode(),
        best,
    })
}
