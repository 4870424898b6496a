use pregrasp::env::layout;
use pregrasp::nn::Matrix;
use pregrasp::sac::gradcheck::{check_loss_gradients, GradCheckInputs, LossGradReport};
use pregrasp::sac::{gaussian_matrix, Architecture, Batch, NetworksBundle, TrainerConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::HarnessError;

/// Central-difference step used by `grad-check`.
pub const STEP: f64 = 1e-5;
/// Coordinates checked per network unless a full check is requested.
pub const DEFAULT_SUBSET: usize = 600;

pub fn default_architecture() -> Architecture {
    Architecture {
        obs_dim: layout::LEN,
        act_dim: 6,
        hidden_widths: TrainerConfig::default().hidden_widths,
    }
}

fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lim: f64) -> Matrix {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.random_range(-lim..lim)).collect())
        .expect("sized")
}

/// Finite-difference check of all four losses on freshly initialized
/// networks of `arch`, with the Gaussian samples frozen.
pub fn check_architecture(
    arch: &Architecture,
    batch_size: usize,
    limit: Option<usize>,
    seed: u64,
) -> Result<LossGradReport, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let defaults = TrainerConfig::default();
    let bundle = NetworksBundle::new(arch.clone(), defaults.initial_log_alpha, &mut rng)?;
    let n = batch_size;
    let batch = Batch {
        states: uniform(&mut rng, n, arch.obs_dim, 1.0),
        actions: uniform(&mut rng, n, arch.act_dim, 0.99),
        rewards: (0..n).map(|_| rng.random_range(-1.0..3.0)).collect(),
        next_states: uniform(&mut rng, n, arch.obs_dim, 1.0),
        dones: (0..n).map(|i| (i % 4 == 3) as u8 as f64).collect(),
    };
    let value_noise = gaussian_matrix(&mut rng, n, arch.act_dim);
    let policy_noise = gaussian_matrix(&mut rng, n, arch.act_dim);
    let inputs = GradCheckInputs {
        batch: &batch,
        value_noise: &value_noise,
        policy_noise: &policy_noise,
        alpha: bundle.alpha(),
        gamma: defaults.gamma,
        target_entropy: defaults.target_entropy_for(arch.act_dim),
        value_critics: defaults.value_target_critics,
    };
    Ok(check_loss_gradients(&bundle, &inputs, STEP, limit)?)
}
