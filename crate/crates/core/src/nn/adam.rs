use serde::{Deserialize, Serialize};

use super::NnError;

/// Bias-corrected adaptive-moment state for one flat parameter buffer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl OptimizerState {
    pub fn new(num_params: usize) -> Self {
        Self::with_hyperparameters(num_params, 0.9, 0.999, 1e-8)
    }

    pub fn with_hyperparameters(num_params: usize, beta1: f64, beta2: f64, eps: f64) -> Self {
        Self {
            first_moment: vec![0.0; num_params],
            second_moment: vec![0.0; num_params],
            step: 0,
            beta1,
            beta2,
            eps,
        }
    }

    pub fn len(&self) -> usize {
        self.first_moment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.first_moment.is_empty()
    }
}

/// One Adam step on `params` in place.
pub fn adam_update(
    state: &mut OptimizerState,
    params: &mut [f64],
    grads: &[f64],
    lr: f64,
) -> Result<(), NnError> {
    if params.len() != state.len() || grads.len() != state.len() {
        return Err(NnError::Shape(format!(
            "optimizer holds {} moments but got {} params and {} grads",
            state.len(),
            params.len(),
            grads.len()
        )));
    }
    if !(lr > 0.0) {
        return Err(NnError::InvalidArgument(format!("learning rate must be > 0, got {lr}")));
    }
    state.step += 1;
    let t = state.step as f64;
    let (b1, b2) = (state.beta1, state.beta2);
    let c1 = 1.0 - b1.powf(t);
    let c2 = 1.0 - b2.powf(t);
    for (((p, &g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(state.first_moment.iter_mut())
        .zip(state.second_moment.iter_mut())
    {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + state.eps);
    }
    Ok(())
}
