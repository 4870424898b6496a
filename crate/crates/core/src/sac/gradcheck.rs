//! Finite-difference checks of the four loss gradients with the Gaussian
//! samples held fixed.

use serde::Serialize;

use super::buffer::Batch;
use super::bundle::NetworksBundle;
use super::config::ValueTargetCritics;
use super::losses::{critic_loss_and_grads, policy_loss_and_grads, temperature_loss_and_grads, value_loss_and_grads};
use super::SacError;
use crate::nn::gradcheck::{check_coordinates, coordinate_subset, relative_error, Evaluation, GradCheckReport};
use crate::nn::Matrix;

/// Worst relative error per objective.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct LossGradReport {
    pub value: f64,
    pub critic1: f64,
    pub critic2: f64,
    pub policy: f64,
    pub temperature: f64,
    pub checked: usize,
    pub skipped_kinks: usize,
}

impl LossGradReport {
    pub fn max_relative_error(&self) -> f64 {
        [self.value, self.critic1, self.critic2, self.policy, self.temperature]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

/// Inputs shared by every check.
pub struct GradCheckInputs<'a> {
    pub batch: &'a Batch,
    pub value_noise: &'a Matrix,
    pub policy_noise: &'a Matrix,
    pub alpha: f64,
    pub gamma: f64,
    pub target_entropy: f64,
    pub value_critics: ValueTargetCritics,
}

fn tally(total: &mut LossGradReport, r: &GradCheckReport) -> f64 {
    total.checked += r.checked;
    total.skipped_kinks += r.skipped_kinks;
    r.max_relative_error
}

/// Checks every loss; `limit` caps the number of coordinates per network.
pub fn check_loss_gradients(
    bundle: &NetworksBundle,
    inputs: &GradCheckInputs,
    h: f64,
    limit: Option<usize>,
) -> Result<LossGradReport, SacError> {
    let mut report = LossGradReport::default();
    let b = inputs.batch;

    let analytic = value_loss_and_grads(bundle, &b.states, inputs.value_noise, inputs.alpha, inputs.value_critics, true)?;
    let mut probe = bundle.clone();
    let mut params = bundle.value.params().to_vec();
    let idx = coordinate_subset(params.len(), limit);
    let r = check_coordinates(&mut params, &analytic.grads.values, &idx, h, |p| {
        probe.value.set_params(p).expect("same length");
        let l = value_loss_and_grads(&probe, &b.states, inputs.value_noise, inputs.alpha, inputs.value_critics, true)
            .expect("validated shapes");
        Evaluation {
            value: l.loss,
            pattern: l.kink_pattern,
        }
    });
    report.value = tally(&mut report, &r);

    let analytic = critic_loss_and_grads(bundle, b, inputs.gamma, true)?;
    for which in [1, 2] {
        let mut probe = bundle.clone();
        let (net, grads) = if which == 1 {
            (&bundle.critic1, &analytic.critic1.grads)
        } else {
            (&bundle.critic2, &analytic.critic2.grads)
        };
        let mut params = net.params().to_vec();
        let idx = coordinate_subset(params.len(), limit);
        let r = check_coordinates(&mut params, &grads.values, &idx, h, |p| {
            let target = if which == 1 { &mut probe.critic1 } else { &mut probe.critic2 };
            target.set_params(p).expect("same length");
            let l = critic_loss_and_grads(&probe, b, inputs.gamma, true).expect("validated shapes");
            let l = if which == 1 { l.critic1 } else { l.critic2 };
            Evaluation {
                value: l.loss,
                pattern: l.kink_pattern,
            }
        });
        let err = tally(&mut report, &r);
        if which == 1 {
            report.critic1 = err;
        } else {
            report.critic2 = err;
        }
    }

    let analytic = policy_loss_and_grads(bundle, &b.states, inputs.policy_noise, inputs.alpha, true)?;
    let mut probe = bundle.clone();
    let mut params = bundle.actor.params().to_vec();
    let idx = coordinate_subset(params.len(), limit);
    let r = check_coordinates(&mut params, &analytic.grads.values, &idx, h, |p| {
        probe.actor.set_params(p).expect("same length");
        let l = policy_loss_and_grads(&probe, &b.states, inputs.policy_noise, inputs.alpha, true).expect("validated shapes");
        Evaluation {
            value: l.loss,
            pattern: l.kink_pattern,
        }
    });
    report.policy = tally(&mut report, &r);

    let log_probs = &analytic.log_probs;
    let t = temperature_loss_and_grads(bundle.log_alpha, log_probs, inputs.target_entropy)?;
    let f = |la: f64| {
        temperature_loss_and_grads(la, log_probs, inputs.target_entropy)
            .expect("non-empty")
            .loss
    };
    let numeric = (f(bundle.log_alpha + h) - f(bundle.log_alpha - h)) / (2.0 * h);
    report.temperature = relative_error(t.grad_log_alpha, numeric);
    report.checked += 1;
    Ok(report)
}
