//! Central finite-difference checks for analytic gradients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Matrix, Network, NnError};

/// Gradients smaller than this are compared in absolute rather than
/// relative terms.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-4;

/// `|a - b| / max(|a|, |b|, RELATIVE_ERROR_FLOOR)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(RELATIVE_ERROR_FLOOR)
}

/// One evaluation of the objective under test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    /// Identifies the linear piece (rectifier signs, argmin choices, clamp
    /// states) the evaluation landed on.
    pub pattern: u64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub worst_index: Option<usize>,
    pub checked: usize,
    /// Coordinates skipped because `+h` and `-h` straddled a kink.
    pub skipped_kinks: usize,
}

impl GradCheckReport {
    pub fn merge(&mut self, other: &GradCheckReport) {
        if other.max_relative_error > self.max_relative_error {
            self.max_relative_error = other.max_relative_error;
            self.worst_index = other.worst_index;
        }
        self.checked += other.checked;
        self.skipped_kinks += other.skipped_kinks;
    }
}

/// Compares `analytic[i]` against `(f(p + h e_i) - f(p - h e_i)) / 2h` for
/// every `i` in `indices`. `params` is restored before returning.
pub fn check_coordinates(
    params: &mut Vec<f64>,
    analytic: &[f64],
    indices: &[usize],
    h: f64,
    mut objective: impl FnMut(&[f64]) -> Evaluation,
) -> GradCheckReport {
    let mut report = GradCheckReport::default();
    for &i in indices {
        let orig = params[i];
        params[i] = orig + h;
        let plus = objective(params);
        params[i] = orig - h;
        let minus = objective(params);
        params[i] = orig;
        if plus.pattern != minus.pattern {
            report.skipped_kinks += 1;
            continue;
        }
        let numeric = (plus.value - minus.value) / (2.0 * h);
        let err = relative_error(analytic[i], numeric);
        report.checked += 1;
        if err > report.max_relative_error || report.worst_index.is_none() {
            report.max_relative_error = err;
            report.worst_index = Some(i);
        }
    }
    report
}

/// Indices `0..len`, or an evenly strided subset of about `limit` of them.
pub fn coordinate_subset(len: usize, limit: Option<usize>) -> Vec<usize> {
    match limit {
        Some(limit) if limit < len && limit > 0 => {
            let stride = len as f64 / limit as f64;
            (0..limit).map(|k| (k as f64 * stride) as usize).collect()
        }
        _ => (0..len).collect(),
    }
}

/// Backward-vs-central-difference check of a network on the objective
/// `sum(output .* G)`, with `G` a fixed pseudo-random weighting. Covers every
/// parameter and returns the largest relative error.
pub fn finite_difference_check(net: &Network, input: &Matrix, h: f64) -> Result<f64, NnError> {
    Ok(finite_difference_report(net, input, h, None)?.max_relative_error)
}

/// [`finite_difference_check`] with an optional per-network coordinate limit
/// and the full report.
pub fn finite_difference_report(
    net: &Network,
    input: &Matrix,
    h: f64,
    limit: Option<usize>,
) -> Result<GradCheckReport, NnError> {
    if !(h > 0.0) {
        return Err(NnError::InvalidArgument(format!("step must be > 0, got {h}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x6772_6164);
    let weights: Vec<f64> = (0..input.rows() * net.output_width())
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let weights = Matrix::from_vec(input.rows(), net.output_width(), weights)?;

    let (_, cache) = net.forward(input)?;
    let (grads, _) = net.backward(&cache, &weights)?;

    let mut probe = net.clone();
    let mut params = net.params().to_vec();
    let indices = coordinate_subset(params.len(), limit);
    Ok(check_coordinates(&mut params, &grads.values, &indices, h, |p| {
        probe.set_params(p).expect("same length");
        let (y, cache) = probe.forward(input).expect("validated shapes");
        Evaluation {
            value: y.data().iter().zip(weights.data()).map(|(a, b)| a * b).sum(),
            pattern: cache.activation_pattern(),
        }
    }))
}
