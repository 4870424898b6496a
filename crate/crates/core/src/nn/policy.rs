//! Tanh-squashed diagonal Gaussian policy head.

use super::{Matrix, NnError};

pub const LOG_STD_MIN: f64 = -20.0;
pub const LOG_STD_MAX: f64 = 2.0;
/// Added inside the log of the tanh change-of-variables term.
pub const SQUASH_EPS: f64 = 1e-6;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_7;

/// Mean and clamped log standard deviation for one state.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianPolicyOutput {
    pub mean: Vec<f64>,
    pub log_std: Vec<f64>,
}

impl GaussianPolicyOutput {
    /// Splits a raw `2 * act_dim` network output row into mean and
    /// log-std, clamping the latter.
    pub fn from_raw(raw: &[f64]) -> Result<Self, NnError> {
        if raw.len() % 2 != 0 {
            return Err(NnError::Shape(format!(
                "policy output must have even width, got {}",
                raw.len()
            )));
        }
        let d = raw.len() / 2;
        Ok(Self {
            mean: raw[..d].to_vec(),
            log_std: raw[d..].iter().map(|v| v.clamp(LOG_STD_MIN, LOG_STD_MAX)).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Noise-free action `tanh(mean)`.
    pub fn deterministic_action(&self) -> Vec<f64> {
        self.mean.iter().map(|m| m.tanh()).collect()
    }
}

/// A reparameterized sample and the pieces needed to differentiate it.
#[derive(Clone, Debug, PartialEq)]
pub struct SquashedSample {
    pub action: Vec<f64>,
    pub log_prob: f64,
}

/// `action = tanh(mean + noise * exp(log_std))` and the log-density of that
/// action under the squashed Gaussian.
pub fn sample_squashed_action(out: &GaussianPolicyOutput, noise: &[f64]) -> SquashedSample {
    let mut log_prob = 0.0;
    let action = out
        .mean
        .iter()
        .zip(&out.log_std)
        .zip(noise)
        .map(|((&mu, &ls), &xi)| {
            let a = (mu + xi * ls.exp()).tanh();
            log_prob += -0.5 * xi * xi - ls - HALF_LN_2PI - (1.0 - a * a + SQUASH_EPS).ln();
            a
        })
        .collect();
    SquashedSample { action, log_prob }
}

/// Partial derivatives of a scalar objective `L(action, log_prob)` pulled
/// back to the head's mean and log-std, given `dL/daction` and `dL/dlog_prob`.
pub fn squashed_sample_pullback(
    out: &GaussianPolicyOutput,
    noise: &[f64],
    sample: &SquashedSample,
    d_action: &[f64],
    d_log_prob: f64,
) -> (Vec<f64>, Vec<f64>) {
    let d = out.dim();
    let mut d_mean = vec![0.0; d];
    let mut d_log_std = vec![0.0; d];
    for i in 0..d {
        let a = sample.action[i];
        let sigma = out.log_std[i].exp();
        let one_minus = 1.0 - a * a;
        // d log_prob / d u, u the pre-squash sample
        let dlogp_du = 2.0 * a * one_minus / (one_minus + SQUASH_EPS);
        let du = d_action[i] * one_minus + d_log_prob * dlogp_du;
        d_mean[i] = du;
        // u depends on log_std through sigma * xi; log_prob also has -log_std
        d_log_std[i] = du * sigma * noise[i] - d_log_prob;
    }
    (d_mean, d_log_std)
}

/// Mask for the gradient of the log-std clamp: `1` where the raw value was
/// inside the clamp range, `0` where it was clipped.
pub fn log_std_clamp_mask(raw_log_std: &[f64]) -> Vec<f64> {
    raw_log_std
        .iter()
        .map(|&v| if (LOG_STD_MIN..=LOG_STD_MAX).contains(&v) { 1.0 } else { 0.0 })
        .collect()
}

/// Batch form of [`GaussianPolicyOutput::from_raw`].
pub fn split_policy_batch(raw: &Matrix) -> Result<Vec<GaussianPolicyOutput>, NnError> {
    (0..raw.rows()).map(|i| GaussianPolicyOutput::from_raw(raw.row(i))).collect()
}
