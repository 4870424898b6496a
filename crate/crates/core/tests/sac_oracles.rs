use std::cell::RefCell;

use pregrasp::env::{EnvConfig, Environment, GraspEnv, PointMassConfig, PointMassEnv, TrackingController};
use pregrasp::nn::{adam_update, Matrix, Network, OptimizerState};
use pregrasp::sac::gradcheck::{check_loss_gradients, GradCheckInputs};
use pregrasp::sac::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Matrix {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.random_range(-scale..scale)).collect()).unwrap()
}

fn random_batch(rng: &mut ChaCha8Rng, n: usize, obs: usize, act: usize) -> Batch {
    Batch {
        states: random_matrix(rng, n, obs, 1.0),
        actions: random_matrix(rng, n, act, 0.99),
        rewards: (0..n).map(|_| rng.random_range(-1.0..3.0)).collect(),
        next_states: random_matrix(rng, n, obs, 1.0),
        dones: (0..n).map(|i| (i % 5 == 0) as u8 as f64).collect(),
    }
}

/// A bundle whose actor has non-trivial spread, so every term of the policy
/// objective contributes.
fn perturbed_bundle(arch: Architecture, seed: u64) -> NetworksBundle {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = NetworksBundle::new(arch, 0.3f64.ln(), &mut rng).unwrap();
    for p in b.actor.params_mut() {
        *p += rng.random_range(-0.05..0.05);
    }
    for p in b.value.params_mut() {
        *p += rng.random_range(-0.05..0.05);
    }
    b
}

fn run_gradcheck(arch: Architecture, n: usize, limit: Option<usize>, seed: u64) {
    let bundle = perturbed_bundle(arch.clone(), seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
    let batch = random_batch(&mut rng, n, arch.obs_dim, arch.act_dim);
    let value_noise = gaussian_matrix(&mut rng, n, arch.act_dim);
    let policy_noise = gaussian_matrix(&mut rng, n, arch.act_dim);
    for critics in [ValueTargetCritics::Online, ValueTargetCritics::Target] {
        let inputs = GradCheckInputs {
            batch: &batch,
            value_noise: &value_noise,
            policy_noise: &policy_noise,
            alpha: bundle.alpha(),
            gamma: 0.99,
            target_entropy: -(arch.act_dim as f64),
            value_critics: critics,
        };
        let report = check_loss_gradients(&bundle, &inputs, 1e-5, limit).unwrap();
        assert!(report.checked > 0);
        for (name, err) in [
            ("value", report.value),
            ("critic 1", report.critic1),
            ("critic 2", report.critic2),
            ("policy", report.policy),
        ] {
            assert!(err < 1e-5, "{name}: relative error {err:e} ({report:?})");
        }
        assert!(report.temperature < 1e-6, "temperature: {:e}", report.temperature);
    }
}

#[test]
fn loss_gradients_match_finite_differences_small_networks() {
    for seed in 0..3 {
        let arch = Architecture {
            obs_dim: 5,
            act_dim: 3,
            hidden_widths: vec![16, 12],
        };
        run_gradcheck(arch, 8, None, seed);
    }
}

#[test]
fn loss_gradients_match_finite_differences_default_architecture() {
    let arch = Architecture {
        obs_dim: 40,
        act_dim: 6,
        hidden_widths: TrainerConfig::default().hidden_widths,
    };
    run_gradcheck(arch, 16, Some(400), 7);
}

#[test]
fn temperature_gradient_matches_finite_difference() {
    let lp = [-3.0, -5.5, -7.25, -4.0];
    for la in [-4.0, -1.6, 0.0, 1.3] {
        let h = 1e-6;
        let f = |x: f64| temperature_loss_and_grads(x, &lp, -6.0).unwrap().loss;
        let numeric = (f(la + h) - f(la - h)) / (2.0 * h);
        let analytic = temperature_loss_and_grads(la, &lp, -6.0).unwrap().grad_log_alpha;
        assert!((numeric - analytic).abs() <= 1e-6 * analytic.abs().max(1e-4), "{la}: {numeric} vs {analytic}");
    }
}

fn constant_output(net: &mut Network, c: f64) {
    let mut p = vec![0.0; net.num_params()];
    *p.last_mut().unwrap() = c;
    net.set_params(&p).unwrap();
}

fn small_arch() -> Architecture {
    Architecture {
        obs_dim: 3,
        act_dim: 2,
        hidden_widths: vec![8],
    }
}

#[test]
fn critic_loss_vanishes_when_q_equals_reward_without_discount() {
    let mut b = perturbed_bundle(small_arch(), 3);
    constant_output(&mut b.critic1, 1.25);
    constant_output(&mut b.critic2, 1.25);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut batch = random_batch(&mut rng, 6, 3, 2);
    batch.rewards = vec![1.25; 6];
    let l = critic_loss_and_grads(&b, &batch, 0.0, false).unwrap();
    assert!(l.critic1.loss.abs() < 1e-12 && l.critic2.loss.abs() < 1e-12);
    assert!(l.critic1.grads.max_abs() < 1e-12 && l.critic2.grads.max_abs() < 1e-12);
}

#[test]
fn terminal_transitions_bootstrap_nothing() {
    let mut b = perturbed_bundle(small_arch(), 5);
    constant_output(&mut b.value, 17.0);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut batch = random_batch(&mut rng, 4, 3, 2);
    batch.dones = vec![1.0, 0.0, 1.0, 0.0];
    let y = pregrasp::sac::losses::critic_targets(&b, &batch, 0.9).unwrap();
    assert_eq!(y[0], batch.rewards[0]);
    assert_eq!(y[2], batch.rewards[2]);
    assert!((y[1] - (batch.rewards[1] + 0.9 * 17.0)).abs() < 1e-12);
    assert!((y[3] - (batch.rewards[3] + 0.9 * 17.0)).abs() < 1e-12);
}

/// One-dimensional action with both critics equal to `-|a|`, built exactly
/// from two rectifiers. The actor is reduced to its output biases.
fn peaked_bundle(mean: f64, log_std: f64) -> NetworksBundle {
    let arch = Architecture {
        obs_dim: 1,
        act_dim: 1,
        hidden_widths: vec![2],
    };
    let mut b = NetworksBundle::new(arch, 0.0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    // critic: input [s, a] -> [relu(a), relu(-a)] -> -(h1 + h2)
    let critic = vec![0.0, 1.0, 0.0, -1.0, 0.0, 0.0, -1.0, -1.0, 0.0];
    b.critic1.set_params(&critic).unwrap();
    b.critic2.set_params(&critic).unwrap();
    let mut actor = vec![0.0; b.actor.num_params()];
    let n = actor.len();
    actor[n - 2] = mean;
    actor[n - 1] = log_std;
    b.actor.set_params(&actor).unwrap();
    b
}

#[test]
fn policy_gradient_points_toward_the_critic_peak() {
    let states = Matrix::from_vec(4, 1, vec![0.3, -0.2, 0.9, 0.0]).unwrap();
    let noise = gaussian_matrix(&mut ChaCha8Rng::seed_from_u64(9), 4, 1);
    for (mean, sign) in [(0.5, 1.0), (-0.7, -1.0)] {
        let b = peaked_bundle(mean, -8.0);
        let g = policy_loss_and_grads(&b, &states, &noise, 0.0, false).unwrap();
        let n = g.grads.values.len();
        assert!(g.grads.values[n - 2] * sign > 0.0, "mean {mean}: {}", g.grads.values[n - 2]);
    }
}

#[test]
fn policy_descent_reaches_the_critic_peak() {
    let states = Matrix::from_vec(8, 1, (0..8).map(|i| i as f64 * 0.1).collect()).unwrap();
    let mut b = peaked_bundle(0.8, -1.0);
    let mut opt = OptimizerState::new(b.actor.num_params());
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..3000 {
        let noise = gaussian_matrix(&mut rng, 8, 1);
        let g = policy_loss_and_grads(&b, &states, &noise, 0.0, false).unwrap();
        adam_update(&mut opt, b.actor.params_mut(), &g.grads.values, 3e-3).unwrap();
    }
    let a = b.deterministic_action(&[0.0]).unwrap()[0];
    assert!(a.abs() < 0.05, "noise-free action {a}");
}

#[test]
fn replay_sampling_is_uniform() {
    let mut buf = ReplayBuffer::new(10, 1, 1);
    for i in 0..25 {
        buf.push(&Transition {
            state: vec![i as f64],
            action: vec![0.0],
            reward: 0.0,
            next_state: vec![0.0],
            done: false,
        })
        .unwrap();
    }
    assert_eq!(buf.len(), 10);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let draws = 100_000;
    let mut counts = [0usize; 10];
    for _ in 0..draws {
        counts[buf.sample_indices(1, &mut rng).unwrap()[0]] += 1;
    }
    let expected = draws as f64 / 10.0;
    let sigma = (draws as f64 * 0.1 * 0.9).sqrt();
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    // 99.9th percentile of chi-square with 9 degrees of freedom
    assert!(chi2 < 27.88, "chi-square {chi2}, counts {counts:?}");
    for c in counts {
        assert!((c as f64 - expected).abs() < 4.0 * sigma, "{counts:?}");
    }
}

proptest! {
    #[test]
    fn sampled_batches_hold_distinct_live_indices(len in 1usize..60, cap in 1usize..40, n in 1usize..40, seed in any::<u64>()) {
        let mut buf = ReplayBuffer::new(cap, 2, 1);
        for i in 0..len {
            buf.push(&Transition { state: vec![i as f64, 0.0], action: vec![0.5], reward: 1.0, next_state: vec![0.0, 0.0], done: false }).unwrap();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match buf.sample_indices(n, &mut rng) {
            Ok(idx) => {
                prop_assert!(n <= buf.len());
                let mut sorted = idx.clone();
                sorted.sort_unstable();
                sorted.dedup();
                prop_assert_eq!(sorted.len(), n);
                prop_assert!(idx.iter().all(|&i| i < buf.len()));
            }
            Err(e) => {
                let insufficient = matches!(e, SacError::InsufficientData { requested, available } if requested == n && available == buf.len());
                prop_assert!(insufficient);
                prop_assert!(n > buf.len());
            }
        }
    }

    #[test]
    fn soft_update_stays_on_the_segment(tau in 0.0f64..=1.0, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let online = Network::init(&[3, 5, 2], 1.0, &mut rng).unwrap();
        let mut target = Network::init(&[3, 5, 2], 1.0, &mut rng).unwrap();
        let before = target.clone();
        soft_update(&mut target, &online, tau).unwrap();
        for ((t, b), o) in target.params().iter().zip(before.params()).zip(online.params()) {
            let (lo, hi) = if b < o { (b, o) } else { (o, b) };
            prop_assert!(*t >= lo - 1e-15 && *t <= hi + 1e-15);
            prop_assert!((t - (tau * b + (1.0 - tau) * o)).abs() <= 1e-15);
        }
    }
}

fn smoke_config(seed: u64, widths: Vec<usize>) -> (EnvConfig, TrainerConfig) {
    let env = EnvConfig {
        episode_length: 50,
        ..EnvConfig::default()
    };
    let trainer = TrainerConfig {
        batch_size: 32,
        buffer_capacity: 500,
        learning_starts: 32,
        hidden_widths: widths,
        total_episodes: 10,
        eval_every: 5,
        eval_episodes: 2,
        seed,
        ..TrainerConfig::default()
    };
    (env, trainer)
}

#[test]
fn smoke_run_on_the_grasp_task() {
    let (env, cfg) = smoke_config(0, TrainerConfig::default().hidden_widths);
    let (report, trainer) = train(&env, &cfg).unwrap();
    assert_eq!(report.episodes.len(), 10);
    assert_eq!(report.evaluations.len(), 2);
    assert_eq!(trainer.buffer().len(), 500);
    assert!(trainer.bundle().is_finite());
    for s in &report.episodes {
        assert_eq!(s.steps, 50);
        assert!(s.alpha > 0.0 && s.alpha.is_finite());
        assert!(s.reward_total.is_finite());
        if let Some(l) = &s.losses {
            for v in [l.value, l.critic1, l.critic2, l.policy, l.temperature] {
                assert!(v.is_finite());
            }
        }
    }
    assert!(report.episodes.last().unwrap().losses.is_some());
    for i in 0..trainer.buffer().len() {
        let t = trainer.buffer().get(i).unwrap();
        assert!(t.action.iter().all(|a| (-1.0..=1.0).contains(a)), "{:?}", t.action);
    }
    let last = report.episodes.last().unwrap();
    assert_eq!(last.lr, linear_lr(9, 10, cfg.actor_lr_initial, cfg.actor_lr_final).unwrap());
}

#[test]
fn identical_seeds_train_identically() {
    let run = |seed| {
        let (env, cfg) = smoke_config(seed, vec![32, 32]);
        let (report, trainer) = train(&env, &cfg).unwrap();
        (report, trainer.bundle().clone())
    };
    let (a, ba) = run(3);
    let (b, bb) = run(3);
    assert_eq!(a, b);
    assert_eq!(ba, bb);
    let (c, _) = run(4);
    assert_ne!(a.episodes, c.episodes);
}

#[test]
fn point_mass_trainer_improves_quickly() {
    let cfg = TrainerConfig {
        hidden_widths: vec![64, 64],
        batch_size: 64,
        learning_starts: 500,
        total_episodes: 200,
        eval_every: 25,
        eval_episodes: 20,
        ..TrainerConfig::default()
    };
    let env = PointMassEnv::new(PointMassConfig::default()).unwrap();
    let mut trainer = Trainer::new(env.clone(), env, cfg).unwrap();
    trainer.run(|_| {}).unwrap();
    let best = trainer.best().unwrap();
    let mut env = PointMassEnv::new(PointMassConfig::default()).unwrap();
    let r = evaluate_policy(&best.bundle, &mut env, 100, 99, None).unwrap();
    assert!(r.success_rate >= 0.9, "{r:?}");
}

struct RandomPolicy(RefCell<ChaCha8Rng>);

impl Policy for RandomPolicy {
    fn act(&self, _: &[f64]) -> Result<Vec<f64>, SacError> {
        let mut rng = self.0.borrow_mut();
        Ok((0..6).map(|_| rng.random_range(-1.0..=1.0)).collect())
    }
}

#[test]
fn scripted_tracker_succeeds_on_resting_targets() {
    let env = EnvConfig::default();
    let tracker = TrackingController::new(&env);
    let r = evaluate(&tracker, &env, 20, 0.0, 5).unwrap();
    assert_eq!(r.success_rate, 1.0, "{r:?}");
    assert_eq!(r.velocity_cap, Some(0.0));
    assert_eq!(r.episodes, 20);
}

#[test]
fn random_policy_rarely_succeeds() {
    let env = EnvConfig::default();
    let policy = RandomPolicy(RefCell::new(ChaCha8Rng::seed_from_u64(1)));
    let r = evaluate(&policy, &env, 20, 0.4, 5).unwrap();
    assert!(r.success_rate <= 0.05, "{r:?}");
}

#[test]
fn sweep_reports_follow_cap_order() {
    let env = EnvConfig {
        episode_length: 150,
        ..EnvConfig::default()
    };
    let tracker = TrackingController::new(&env);
    let caps = [0.0, 0.1, 0.2, 0.4];
    let sweep = velocity_sweep(&tracker, &env, &caps, 3, 2).unwrap();
    assert_eq!(sweep.len(), 4);
    for (r, c) in sweep.iter().zip(caps) {
        assert_eq!(r.velocity_cap, Some(c));
        assert_eq!(r.episodes, 3);
    }
    let single = velocity_sweep(&tracker, &env, &[0.2], 3, 2).unwrap();
    assert_eq!(single, vec![evaluate(&tracker, &env, 3, 0.2, 2).unwrap()]);
    assert_eq!(single[0], sweep[2]);
    let dup = velocity_sweep(&tracker, &env, &[0.1, 0.1], 3, 2).unwrap();
    assert_eq!(dup[0], dup[1]);
    assert!(velocity_sweep(&tracker, &env, &[], 3, 2).is_err());
}

#[test]
fn evaluation_reuses_episode_seeds() {
    let env_cfg = EnvConfig::default();
    let mut env = GraspEnv::new(env_cfg.clone()).unwrap();
    let first = env.reset(episode_seed(8, 0));
    let again = env.reset(episode_seed(8, 0));
    assert_eq!(first, again);
    assert_ne!(first, env.reset(episode_seed(8, 1)));
    let tracker = TrackingController::new(&env_cfg);
    let a = evaluate(&tracker, &env_cfg, 2, 0.1, 8).unwrap();
    let b = evaluate(&tracker, &env_cfg, 2, 0.1, 8).unwrap();
    assert_eq!(a, b);
}
