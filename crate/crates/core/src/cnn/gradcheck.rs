use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::net::{self, Cache};
use super::train::loss_and_gradient;
use super::{CnnError, CnnModel};
use crate::features::FeatureVector;
use crate::Label;

/// Weights sampled from each tensor.
const PER_TENSOR: usize = 16;
/// Below this gradient magnitude the absolute difference is reported instead.
const ABS_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub worst_tensor: &'static str,
    pub worst_index: usize,
    pub checked: usize,
}

fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs());
    let diff = (analytic - numeric).abs();
    if scale < ABS_FLOOR {
        diff
    } else {
        diff / scale
    }
}

/// Compare backprop gradients with central differences on sampled weights.
///
/// Samples [`PER_TENSOR`] weights from every tensor (128 in total) with a fixed RNG, so the
/// check is reproducible for a given model and sample.
pub fn grad_check(
    model: &CnnModel,
    sample: &FeatureVector,
    label: Label,
    epsilon: f64,
) -> Result<GradCheckReport, CnnError> {
    if !(1e-7..=1e-3).contains(&epsilon) {
        return Err(CnnError::InvalidEpsilon(epsilon));
    }
    if sample.input_dim() != model.input_dim() {
        return Err(CnnError::ShapeMismatch {
            expected: model.input_dim(),
            got: sample.input_dim(),
        });
    }
    let layout = *model.layout();
    let input = model.standardizer().apply(&sample.input());
    let mut params: Vec<f64> = model.params().iter().map(|&p| p as f64).collect();
    let (_, analytic) = loss_and_gradient(&layout, &params, &input, label);

    let y = label.target();
    let mut cache = Cache::new(&layout);
    let mut loss_at = |params: &[f64]| {
        net::bce_from_logit(net::forward(&layout, params, &input, &mut cache), y)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(0x6772_6164);
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst_tensor: "",
        worst_index: 0,
        checked: 0,
    };
    for tensor in layout.tensors() {
        for _ in 0..PER_TENSOR {
            let i = rng.gen_range(tensor.range.clone());
            let original = params[i];
            params[i] = original + epsilon;
            let plus = loss_at(&params);
            params[i] = original - epsilon;
            let minus = loss_at(&params);
            params[i] = original;
            let numeric = (plus - minus) / (2.0 * epsilon);
            let err = relative_error(analytic[i], numeric);
            report.checked += 1;
            if err > report.max_relative_error || report.worst_tensor.is_empty() {
                report.max_relative_error = err;
                report.worst_tensor = tensor.name;
                report.worst_index = i;
            }
        }
    }
    Ok(report)
}
