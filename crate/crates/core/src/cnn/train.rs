use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::net::{self, Cache, Layout};
use super::{CnnError, CnnModel, Standardizer};
use crate::features::FeatureVector;
use crate::Label;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-7,
        }
    }
}

/// Mini-batch Adam on binary cross-entropy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub adam: AdamConfig,
    /// Fit per-input mean/std on the training set and bake it into the model.
    pub standardize: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 32,
            epochs: 50,
            seed: 0,
            adam: AdamConfig::default(),
            standardize: true,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<(), CnnError> {
        if !(self.learning_rate > 0.0) {
            return Err(CnnError::InvalidConfig("learning_rate must be positive".into()));
        }
        if self.epochs == 0 {
            return Err(CnnError::InvalidConfig("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(CnnError::InvalidConfig("batch_size must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean per-sample loss over the epoch, measured before each batch update.
    pub loss: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub model: CnnModel,
    pub history: Vec<EpochStats>,
}

/// BCE loss and its gradient for one standardized input, with `f64` parameters.
pub fn loss_and_gradient(layout: &Layout, params: &[f64], input: &[f64], label: Label) -> (f64, Vec<f64>) {
    let mut cache = Cache::new(layout);
    let mut grad = vec![0.0; layout.total];
    let logit = net::forward(layout, params, input, &mut cache);
    let y = label.target();
    net::backward(layout, params, &mut cache, net::sigmoid(logit) - y, &mut grad);
    (net::bce_from_logit(logit, y), grad)
}

struct Adam {
    cfg: AdamConfig,
    lr: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(n: usize, lr: f64, cfg: AdamConfig) -> Self {
        Self {
            cfg,
            lr,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let AdamConfig { beta1, beta2, epsilon } = self.cfg;
        let c1 = 1.0 - beta1.powi(self.t);
        let c2 = 1.0 - beta2.powi(self.t);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * g;
            self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + epsilon);
        }
    }
}

/// Train a model in place of `model` and return it with the per-epoch history.
///
/// Optimisation keeps an `f64` master copy of the weights; the returned model holds them
/// rounded to `f32`. Aborts with [`CnnError::NonFiniteLoss`] on divergence.
pub fn train(
    model: CnnModel,
    dataset: &[(FeatureVector, Label)],
    config: &TrainConfig,
) -> Result<TrainedModel, CnnError> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(CnnError::EmptyDataset);
    }
    let layout = model.layout;
    let raw: Vec<Vec<f64>> = dataset
        .iter()
        .map(|(f, _)| {
            if f.input_dim() != layout.input_dim {
                Err(CnnError::ShapeMismatch {
                    expected: layout.input_dim,
                    got: f.input_dim(),
                })
            } else {
                Ok(f.input())
            }
        })
        .collect::<Result<_, _>>()?;
    let standardizer = if config.standardize {
        Standardizer::fit(&raw)
    } else {
        model.standardizer.clone()
    };
    let inputs: Vec<Vec<f64>> = raw.iter().map(|r| standardizer.apply(r)).collect();
    let targets: Vec<f64> = dataset.iter().map(|(_, l)| l.target()).collect();

    let mut params: Vec<f64> = model.params.iter().map(|&p| p as f64).collect();
    let mut adam = Adam::new(params.len(), config.learning_rate, config.adam);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut cache = Cache::new(&layout);
    let mut grad = vec![0.0; layout.total];
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for batch in order.chunks(config.batch_size) {
            grad.fill(0.0);
            let scale = 1.0 / batch.len() as f64;
            let mut batch_loss = 0.0;
            for &i in batch {
                let logit = net::forward(&layout, &params, &inputs[i], &mut cache);
                let y = targets[i];
                let p = net::sigmoid(logit);
                batch_loss += net::bce_from_logit(logit, y);
                if (p > 0.5) == (y > 0.5) {
                    correct += 1;
                }
                net::backward(&layout, &params, &mut cache, (p - y) * scale, &mut grad);
            }
            if !batch_loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(CnnError::NonFiniteLoss { epoch });
            }
            loss_sum += batch_loss;
            adam.step(&mut params, &grad);
        }
        let stats = EpochStats {
            epoch,
            loss: loss_sum / dataset.len() as f64,
            accuracy: correct as f64 / dataset.len() as f64,
        };
        log::debug!("epoch {epoch}: loss {:.5} acc {:.4}", stats.loss, stats.accuracy);
        history.push(stats);
    }

    if params.iter().any(|p| !p.is_finite()) {
        return Err(CnnError::NonFiniteLoss {
            epoch: config.epochs - 1,
        });
    }
    let model = CnnModel {
        layout,
        standardizer,
        params: params.iter().map(|&p| p as f32).collect(),
    };
    Ok(TrainedModel { model, history })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnn::{build_model, forward};

    fn sample(v: f64, label: Label) -> (FeatureVector, Label) {
        let mfcc: Vec<f64> = (0..40).map(|i| v + 0.05 * (i % 5) as f64).collect();
        (FeatureVector::new("s", mfcc, 0.1, false).unwrap(), label)
    }

    #[test]
    fn memorises_single_sample() {
        let data = vec![sample(0.3, Label::Hate)];
        let cfg = TrainConfig {
            batch_size: 1,
            epochs: 200,
            standardize: false,
            ..TrainConfig::default()
        };
        let out = train(build_model(40, 5).unwrap(), &data, &cfg).unwrap();
        assert_eq!(out.history.len(), 200);
        let last = out.history.last().unwrap();
        assert!(last.loss < 0.01, "loss {}", last.loss);
        let p = forward(&out.model, &data[0].0).unwrap();
        assert_eq!(p.label, Label::Hate);
    }

    #[test]
    fn rejects_empty_and_bad_config() {
        let m = build_model(40, 0).unwrap();
        assert!(matches!(train(m.clone(), &[], &TrainConfig::default()), Err(CnnError::EmptyDataset)));
        let cfg = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        assert!(matches!(
            train(m.clone(), &[sample(0.0, Label::Hate)], &cfg),
            Err(CnnError::InvalidConfig(_))
        ));
        let cfg = TrainConfig {
            learning_rate: 0.0,
            ..TrainConfig::default()
        };
        assert!(train(m, &[sample(0.0, Label::Hate)], &cfg).is_err());
    }

    #[test]
    fn divergence_is_reported() {
        let data = vec![sample(0.5, Label::Hate), sample(-0.5, Label::NonHate)];
        let cfg = TrainConfig {
            learning_rate: 1e300,
            epochs: 5,
            standardize: false,
            ..TrainConfig::default()
        };
        let err = train(build_model(40, 1).unwrap(), &data, &cfg).unwrap_err();
        assert!(matches!(err, CnnError::NonFiniteLoss { .. }), "{err:?}");
    }

    #[test]
    fn deterministic_for_seed() {
        let data: Vec<_> = (0..20)
            .map(|i| sample(i as f64 / 10.0 - 1.0, if i % 2 == 0 { Label::Hate } else { Label::NonHate }))
            .collect();
        let cfg = TrainConfig {
            epochs: 3,
            batch_size: 4,
            seed: 42,
            ..TrainConfig::default()
        };
        let a = train(build_model(40, 2).unwrap(), &data, &cfg).unwrap();
        let b = train(build_model(40, 2).unwrap(), &data, &cfg).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.history, b.history);
    }
}
