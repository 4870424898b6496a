//! The four soft actor-critic objectives and their analytic gradients.
//!
//! Every function takes its Gaussian noise explicitly so that gradients can
//! be checked against finite differences with the samples held fixed. When
//! `track_kinks` is set, the returned `kink_pattern` identifies the piecewise
//! branch (rectifier signs, min-critic choices, log-std clamps) the objective
//! was evaluated on; it is 0 otherwise.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use super::buffer::Batch;
use super::bundle::NetworksBundle;
use super::config::ValueTargetCritics;
use super::SacError;
use crate::nn::policy::{log_std_clamp_mask, sample_squashed_action, squashed_sample_pullback, split_policy_batch};
use crate::nn::{ForwardCache, GaussianPolicyOutput, GradientBundle, Matrix, Network, SquashedSample};

#[derive(Clone, Debug)]
pub struct NetworkLoss {
    pub loss: f64,
    pub grads: GradientBundle,
    pub kink_pattern: u64,
}

#[derive(Clone, Debug)]
pub struct CriticLosses {
    pub critic1: NetworkLoss,
    pub critic2: NetworkLoss,
}

#[derive(Clone, Debug)]
pub struct PolicyLoss {
    pub loss: f64,
    pub grads: GradientBundle,
    /// Log-probabilities of the sampled actions, reused by the temperature
    /// objective.
    pub log_probs: Vec<f64>,
    pub kink_pattern: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TemperatureLoss {
    pub loss: f64,
    /// Derivative with respect to `log_alpha`.
    pub grad_log_alpha: f64,
}

struct PolicySamples {
    raw: Matrix,
    cache: Option<ForwardCache>,
    outputs: Vec<GaussianPolicyOutput>,
    samples: Vec<SquashedSample>,
    actions: Matrix,
}

fn check_noise(noise: &Matrix, rows: usize, act_dim: usize) -> Result<(), SacError> {
    if noise.shape() != (rows, act_dim) {
        return Err(SacError::Shape(format!(
            "noise is {:?}, expected ({rows}, {act_dim})",
            noise.shape()
        )));
    }
    Ok(())
}

fn sample_policy(actor: &Network, states: &Matrix, noise: &Matrix, keep_cache: bool) -> Result<PolicySamples, SacError> {
    let act_dim = actor.output_width() / 2;
    check_noise(noise, states.rows(), act_dim)?;
    let (raw, cache) = actor.forward(states)?;
    let outputs = split_policy_batch(&raw)?;
    let samples: Vec<SquashedSample> = outputs
        .iter()
        .enumerate()
        .map(|(i, o)| sample_squashed_action(o, noise.row(i)))
        .collect();
    let actions = Matrix::from_vec(
        states.rows(),
        act_dim,
        samples.iter().flat_map(|s| s.action.iter().copied()).collect(),
    )?;
    Ok(PolicySamples {
        raw,
        cache: keep_cache.then_some(cache),
        outputs,
        samples,
        actions,
    })
}

fn non_empty(rows: usize) -> Result<f64, SacError> {
    if rows == 0 {
        return Err(SacError::InvalidArgument("empty batch".into()));
    }
    Ok(rows as f64)
}

/// Soft value regression: `0.5 * mean (V(s) - (min_j Q_j(s, a) - alpha * log pi(a|s)))^2`
/// with `a` freshly sampled from the policy. Gradients are for the value
/// network only.
pub fn value_loss_and_grads(
    bundle: &NetworksBundle,
    states: &Matrix,
    noise: &Matrix,
    alpha: f64,
    critics: ValueTargetCritics,
    track_kinks: bool,
) -> Result<NetworkLoss, SacError> {
    let n = non_empty(states.rows())?;
    let pol = sample_policy(&bundle.actor, states, noise, false)?;
    let q_in = states.hconcat(&pol.actions)?;
    let (c1, c2) = match critics {
        ValueTargetCritics::Online => (&bundle.critic1, &bundle.critic2),
        ValueTargetCritics::Target => (&bundle.target_critic1, &bundle.target_critic2),
    };
    let q1 = c1.predict(&q_in)?;
    let q2 = c2.predict(&q_in)?;
    let (v, cache) = bundle.value.forward(states)?;
    let mut loss = 0.0;
    let mut dv = Matrix::zeros(states.rows(), 1);
    for i in 0..states.rows() {
        let target = q1.get(i, 0).min(q2.get(i, 0)) - alpha * pol.samples[i].log_prob;
        let diff = v.get(i, 0) - target;
        loss += 0.5 * diff * diff / n;
        dv.set(i, 0, diff / n);
    }
    let (grads, _) = bundle.value.backward(&cache, &dv)?;
    Ok(NetworkLoss {
        loss,
        grads,
        kink_pattern: if track_kinks { cache.activation_pattern() } else { 0 },
    })
}

/// Bellman targets `r + gamma * (1 - done) * V(s')`.
pub fn critic_targets(bundle: &NetworksBundle, batch: &Batch, gamma: f64) -> Result<Vec<f64>, SacError> {
    let v_next = bundle.value.predict(&batch.next_states)?;
    Ok((0..batch.len())
        .map(|i| batch.rewards[i] + gamma * (1.0 - batch.dones[i]) * v_next.get(i, 0))
        .collect())
}

fn regression_loss(net: &Network, input: &Matrix, targets: &[f64], track_kinks: bool) -> Result<NetworkLoss, SacError> {
    let n = non_empty(input.rows())?;
    let (q, cache) = net.forward(input)?;
    let mut loss = 0.0;
    let mut dq = Matrix::zeros(input.rows(), 1);
    for (i, y) in targets.iter().enumerate() {
        let diff = q.get(i, 0) - y;
        loss += 0.5 * diff * diff / n;
        dq.set(i, 0, diff / n);
    }
    let (grads, _) = net.backward(&cache, &dq)?;
    Ok(NetworkLoss {
        loss,
        grads,
        kink_pattern: if track_kinks { cache.activation_pattern() } else { 0 },
    })
}

/// Soft Bellman residual `0.5 * mean (Q_j(s, a) - y)^2` for each critic, with
/// the value network held constant inside `y`.
pub fn critic_loss_and_grads(
    bundle: &NetworksBundle,
    batch: &Batch,
    gamma: f64,
    track_kinks: bool,
) -> Result<CriticLosses, SacError> {
    let targets = critic_targets(bundle, batch, gamma)?;
    let input = batch.states.hconcat(&batch.actions)?;
    Ok(CriticLosses {
        critic1: regression_loss(&bundle.critic1, &input, &targets, track_kinks)?,
        critic2: regression_loss(&bundle.critic2, &input, &targets, track_kinks)?,
    })
}

/// `mean(alpha * log pi(a|s) - min_j Q_j(s, a))` with the reparameterized
/// action `a = tanh(mu(s) + noise * sigma(s))`. Gradients are for the actor;
/// they flow through the sampled action and the critics' input gradients.
pub fn policy_loss_and_grads(
    bundle: &NetworksBundle,
    states: &Matrix,
    noise: &Matrix,
    alpha: f64,
    track_kinks: bool,
) -> Result<PolicyLoss, SacError> {
    let rows = states.rows();
    let n = non_empty(rows)?;
    let obs_dim = states.cols();
    let act_dim = bundle.actor.output_width() / 2;
    let pol = sample_policy(&bundle.actor, states, noise, true)?;
    let q_in = states.hconcat(&pol.actions)?;
    let (q1, cache1) = bundle.critic1.forward(&q_in)?;
    let (q2, cache2) = bundle.critic2.forward(&q_in)?;

    let mut loss = 0.0;
    let mut pick_first = Vec::with_capacity(rows);
    let mut d1 = Matrix::zeros(rows, 1);
    let mut d2 = Matrix::zeros(rows, 1);
    for i in 0..rows {
        let first = q1.get(i, 0) <= q2.get(i, 0);
        let q_min = if first { q1.get(i, 0) } else { q2.get(i, 0) };
        loss += (alpha * pol.samples[i].log_prob - q_min) / n;
        if first {
            d1.set(i, 0, -1.0 / n);
        } else {
            d2.set(i, 0, -1.0 / n);
        }
        pick_first.push(first);
    }
    let dx1 = bundle.critic1.backward_input(&cache1, &d1)?;
    let dx2 = bundle.critic2.backward_input(&cache2, &d2)?;

    let mut d_raw = Matrix::zeros(rows, 2 * act_dim);
    let mut clamp_bits = Vec::new();
    for i in 0..rows {
        let d_action: Vec<f64> = (0..act_dim)
            .map(|k| dx1.get(i, obs_dim + k) + dx2.get(i, obs_dim + k))
            .collect();
        let (d_mean, d_log_std) =
            squashed_sample_pullback(&pol.outputs[i], noise.row(i), &pol.samples[i], &d_action, alpha / n);
        let mask = log_std_clamp_mask(&pol.raw.row(i)[act_dim..]);
        let row = d_raw.row_mut(i);
        row[..act_dim].copy_from_slice(&d_mean);
        for k in 0..act_dim {
            row[act_dim + k] = d_log_std[k] * mask[k];
        }
        if track_kinks {
            clamp_bits.extend(mask.iter().map(|&m| m > 0.0));
        }
    }
    let actor_cache = pol.cache.as_ref().expect("kept");
    let (grads, _) = bundle.actor.backward(actor_cache, &d_raw)?;

    let kink_pattern = if track_kinks {
        let mut h = DefaultHasher::new();
        actor_cache.activation_pattern().hash(&mut h);
        cache1.activation_pattern().hash(&mut h);
        cache2.activation_pattern().hash(&mut h);
        pick_first.hash(&mut h);
        clamp_bits.hash(&mut h);
        h.finish()
    } else {
        0
    };
    Ok(PolicyLoss {
        loss,
        grads,
        log_probs: pol.samples.iter().map(|s| s.log_prob).collect(),
        kink_pattern,
    })
}

/// `mean(-alpha * (log pi + target_entropy))`, differentiated with respect to
/// `log_alpha`.
pub fn temperature_loss_and_grads(log_alpha: f64, log_probs: &[f64], target_entropy: f64) -> Result<TemperatureLoss, SacError> {
    let n = non_empty(log_probs.len())?;
    let alpha = log_alpha.exp();
    let mean = log_probs.iter().map(|lp| lp + target_entropy).sum::<f64>() / n;
    Ok(TemperatureLoss {
        loss: -alpha * mean,
        grad_log_alpha: -alpha * mean,
    })
}

/// Log-probabilities of freshly sampled actions, for callers that need the
/// temperature objective without the policy objective.
pub fn sampled_log_probs(bundle: &NetworksBundle, states: &Matrix, noise: &Matrix) -> Result<Vec<f64>, SacError> {
    let pol = sample_policy(&bundle.actor, states, noise, false)?;
    Ok(pol.samples.iter().map(|s| s.log_prob).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sac::bundle::Architecture;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bundle() -> NetworksBundle {
        let arch = Architecture {
            obs_dim: 3,
            act_dim: 2,
            hidden_widths: vec![8],
        };
        NetworksBundle::new(arch, 0.1f64.ln(), &mut ChaCha8Rng::seed_from_u64(1)).unwrap()
    }

    fn constant(net: &mut Network, c: f64) {
        let mut p = vec![0.0; net.num_params()];
        *p.last_mut().unwrap() = c;
        net.set_params(&p).unwrap();
    }

    #[test]
    fn value_loss_closed_form() {
        let mut b = bundle();
        constant(&mut b.critic1, 1.5);
        constant(&mut b.critic2, 1.5);
        constant(&mut b.value, 0.0);
        let states = Matrix::from_vec(4, 3, (0..12).map(|i| i as f64 * 0.1).collect()).unwrap();
        let noise = Matrix::zeros(4, 2);
        let l = value_loss_and_grads(&b, &states, &noise, 0.0, ValueTargetCritics::Online, false).unwrap();
        assert!((l.loss - 0.5 * 1.5 * 1.5).abs() < 1e-15);

        constant(&mut b.value, 1.5);
        let l = value_loss_and_grads(&b, &states, &noise, 0.0, ValueTargetCritics::Online, false).unwrap();
        assert_eq!(l.loss, 0.0);
        assert_eq!(l.grads.max_abs(), 0.0);
    }

    #[test]
    fn temperature_stationary_and_sign() {
        let t = temperature_loss_and_grads(0.3, &[6.0, 6.0], -6.0).unwrap();
        assert_eq!(t.grad_log_alpha, 0.0);
        // too deterministic: descent on log alpha raises it
        let t = temperature_loss_and_grads(0.3, &[8.0, 7.0], -6.0).unwrap();
        assert!(t.grad_log_alpha < 0.0);
        assert!(temperature_loss_and_grads(0.0, &[], -6.0).is_err());
    }

    #[test]
    fn noise_shape_is_checked() {
        let b = bundle();
        let states = Matrix::zeros(4, 3);
        assert!(policy_loss_and_grads(&b, &states, &Matrix::zeros(4, 3), 0.1, false).is_err());
    }
}
