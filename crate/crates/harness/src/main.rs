use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use pregrasp::env::EnvConfig;
use pregrasp::sac::{evaluate, velocity_sweep, EvalReport};
use pregrasp_harness::gradient::{check_architecture, default_architecture, DEFAULT_SUBSET, STEP};
use pregrasp_harness::{load_checkpoint, record_episode, train_run, write_trace, RunConfig};

#[derive(Parser)]
#[command(name = "pregrasp", version, about = "Pre-grasp tracking simulator and soft actor-critic trainer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train from a run config.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Parent directory for the run; overrides `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Continue from a checkpoint written under the same config.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Evaluate a checkpoint's noise-free policy at one target speed cap.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 100)]
        episodes: usize,
        /// m/s
        #[arg(long)]
        velocity_cap: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Episode length in steps; defaults to the checkpoint's setting.
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        json: bool,
    },
    /// Evaluate a checkpoint at several target speed caps.
    Sweep {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Comma-separated caps in m/s.
        #[arg(long, value_delimiter = ',', default_value = "0.4,0.3,0.2,0.1")]
        caps: Vec<f64>,
        #[arg(long, default_value_t = 100)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Episode length in steps; defaults to the checkpoint's setting.
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        json: bool,
    },
    /// Record one evaluation episode step by step as JSON.
    Trace {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// m/s; defaults to the checkpoint's environment setting.
        #[arg(long)]
        velocity_cap: Option<f64>,
        /// Episode length in steps; defaults to the checkpoint's setting.
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long, default_value = "trace.json")]
        out: PathBuf,
    },
    /// Compare analytic loss gradients with central differences.
    GradCheck {
        /// Check every coordinate instead of a strided subset.
        #[arg(long)]
        full: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 16)]
        batch: usize,
    },
}

fn print_table(reports: &[EvalReport]) {
    println!("{:>10}  {:>12}  {:>10}  {:>12}", "cap (m/s)", "mean reward", "std", "success rate");
    for r in reports {
        let cap = r.velocity_cap.map_or("-".to_string(), |c| format!("{c:.2}"));
        println!(
            "{:>10}  {:>12.2}  {:>10.2}  {:>12.2}",
            cap, r.mean_reward, r.reward_std, r.success_rate
        );
    }
}

fn with_steps(mut env: EnvConfig, steps: Option<usize>) -> Result<EnvConfig> {
    if let Some(n) = steps {
        env.episode_length = n;
    }
    env.validate()?;
    Ok(env)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { config, out, resume } => {
            let mut cfg = RunConfig::load(&config).with_context(|| format!("loading {}", config.display()))?;
            if let Some(dir) = out {
                cfg.output.dir = dir;
            }
            let outcome = train_run(&cfg, resume.as_deref(), |line| eprintln!("{line}"))?;
            eprintln!(
                "finished episodes {}..{} in {}",
                outcome.first_episode,
                outcome.next_episode,
                outcome.run_dir.display()
            );
            if let Some((episode, r)) = outcome.best {
                eprintln!(
                    "best evaluation after episode {episode}: success {:.2}, mean reward {:.2}",
                    r.success_rate, r.mean_reward
                );
            }
        }
        Command::Eval {
            checkpoint,
            episodes,
            velocity_cap,
            seed,
            steps,
            json,
        } => {
            let (bundle, meta) = load_checkpoint(&checkpoint)?;
            let env = with_steps(meta.env, steps)?;
            let report = evaluate(&bundle, &env, episodes, velocity_cap, seed)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print_table(std::slice::from_ref(&report));
            }
        }
        Command::Sweep {
            checkpoint,
            caps,
            episodes,
            seed,
            steps,
            json,
        } => {
            let (bundle, meta) = load_checkpoint(&checkpoint)?;
            let env = with_steps(meta.env, steps)?;
            let reports = velocity_sweep(&bundle, &env, &caps, episodes, seed)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&reports)?);
            } else {
                print_table(&reports);
            }
        }
        Command::Trace {
            checkpoint,
            seed,
            velocity_cap,
            steps,
            out,
        } => {
            let (bundle, meta) = load_checkpoint(&checkpoint)?;
            let env = match velocity_cap {
                Some(cap) => meta.env.with_velocity_cap(cap),
                None => meta.env.clone(),
            };
            let env = with_steps(env, steps)?;
            let trace = record_episode(&bundle, &env, seed)?;
            write_trace(&trace, &out)?;
            eprintln!("wrote {} steps to {}", trace.len(), out.display());
        }
        Command::GradCheck { full, seed, batch } => {
            if batch == 0 {
                bail!("--batch must be at least 1");
            }
            let arch = default_architecture();
            let limit = (!full).then_some(DEFAULT_SUBSET);
            let r = check_architecture(&arch, batch, limit, seed)?;
            println!(
                "actor {:?}  critics {:?}  value {:?}  step {STEP:e}",
                arch.actor_widths(),
                arch.critic_widths(),
                arch.value_widths()
            );
            println!("{:<12} {:>14}", "loss", "max rel error");
            for (name, e) in [
                ("value", r.value),
                ("critic1", r.critic1),
                ("critic2", r.critic2),
                ("policy", r.policy),
                ("temperature", r.temperature),
            ] {
                println!("{name:<12} {e:>14.3e}");
            }
            let worst = r.max_relative_error();
            println!(
                "checked {} coordinates, skipped {} at kinks; max relative error {worst:.3e}",
                r.checked, r.skipped_kinks
            );
            if !(worst < 1e-5) {
                bail!("max relative error {worst:.3e} is not below 1e-5");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
