//! The audio-feature CNN: a two-stage 1-D convolutional classifier over the 40 MFCCs
//! (optionally 41 with RMS), trained with binary cross-entropy and Adam.

mod gradcheck;
mod io;
pub mod net;
mod train;

pub use gradcheck::{grad_check, GradCheckReport};
pub use io::{load_model, save_model, MODEL_MAGIC, MODEL_VERSION};
pub use train::{loss_and_gradient, train, AdamConfig, EpochStats, TrainConfig, TrainedModel};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::features::{FeatureVector, N_MFCC};
use crate::Label;
use net::{Cache, Layout};

#[derive(Debug, thiserror::Error)]
pub enum CnnError {
    #[error("input dimension must be 40 or 41, got {0}")]
    InvalidInputDim(usize),
    #[error("feature layout has {got} inputs but the model expects {expected}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("training dataset is empty")]
    EmptyDataset,
    #[error("loss became non-finite in epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("gradient-check epsilon {0} outside [1e-7, 1e-3]")]
    InvalidEpsilon(f64),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("unsupported model format version {found} (this build reads {supported})")]
    VersionMismatch { found: u16, supported: u16 },
    #[error("corrupt model payload: {0}")]
    CorruptPayload(String),
}

/// CNN output for one feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub probability: f64,
    pub label: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segment_id: Option<String>,
}

impl Prediction {
    /// Applies the strict `> 0.5` rule.
    pub fn from_probability(probability: f64) -> Self {
        Self {
            probability,
            label: Label::from_probability(probability),
            segment_id: None,
        }
    }

    pub fn for_segment(mut self, id: impl Into<String>) -> Self {
        self.segment_id = Some(id.into());
        self
    }
}

/// Per-input affine normalisation applied before the first convolution. Identity for a
/// freshly built model; fitted from the training set by [`train`].
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f32>,
    pub inv_std: Vec<f32>,
}

impl Standardizer {
    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            inv_std: vec![1.0; dim],
        }
    }

    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let dim = rows[0].len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0f64; dim];
        for r in rows {
            for (m, x) in mean.iter_mut().zip(r) {
                *m += x / n;
            }
        }
        let mut var = vec![0.0f64; dim];
        for r in rows {
            for ((v, x), m) in var.iter_mut().zip(r).zip(&mean) {
                *v += (x - m) * (x - m) / n;
            }
        }
        Self {
            mean: mean.iter().map(|&m| m as f32).collect(),
            inv_std: var
                .iter()
                .map(|&v| if v > 1e-12 { (1.0 / v.sqrt()) as f32 } else { 1.0 })
                .collect(),
        }
    }

    pub fn apply(&self, input: &[f64]) -> Vec<f64> {
        input
            .iter()
            .zip(self.mean.iter().zip(&self.inv_std))
            .map(|(&x, (&m, &s))| (x - m as f64) * s as f64)
            .collect()
    }
}

/// Layer stack plus weights. Weights are stored as `f32`; arithmetic runs in `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct CnnModel {
    layout: Layout,
    standardizer: Standardizer,
    params: Vec<f32>,
}

/// Human-readable layer list for a given input width.
pub fn layer_specs(input_dim: usize) -> Vec<String> {
    let l = Layout::new(input_dim);
    vec![
        format!("input {input_dim}x1"),
        format!("conv1d {} filters, kernel {}x1, stride 1, same, relu", net::CONV1_FILTERS, net::KERNEL),
        format!("maxpool {}x1 -> {}", net::POOL, l.pooled1),
        format!("conv1d {} filters, kernel {}x1, stride 1, same, relu", net::CONV2_FILTERS, net::KERNEL),
        format!("maxpool {}x1 -> {}", net::POOL, l.pooled2),
        format!("flatten -> {}", l.flat),
        format!("dense {}, relu", net::DENSE_UNITS),
        "dense 1, sigmoid".to_string(),
    ]
}

/// Fresh model with He-normal ReLU layers, Glorot-normal output layer and zero biases.
pub fn build_model(input_dim: usize, seed: u64) -> Result<CnnModel, CnnError> {
    if input_dim != N_MFCC && input_dim != N_MFCC + 1 {
        return Err(CnnError::InvalidInputDim(input_dim));
    }
    let layout = Layout::new(input_dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = vec![0.0f32; layout.total];
    let output = layout.dense2();
    for t in layout.tensors() {
        if t.is_bias {
            continue;
        }
        let std = if t.range.start >= output.start {
            (2.0 / (t.fan_in + 1) as f64).sqrt()
        } else {
            (2.0 / t.fan_in as f64).sqrt()
        };
        let normal = Normal::new(0.0, std).expect("positive std");
        for p in &mut params[t.range.clone()] {
            *p = normal.sample(&mut rng) as f32;
        }
    }
    Ok(CnnModel {
        layout,
        standardizer: Standardizer::identity(input_dim),
        params,
    })
}

impl CnnModel {
    pub(crate) fn from_parts(
        input_dim: usize,
        standardizer: Standardizer,
        params: Vec<f32>,
    ) -> Result<Self, CnnError> {
        if input_dim != N_MFCC && input_dim != N_MFCC + 1 {
            return Err(CnnError::InvalidInputDim(input_dim));
        }
        let layout = Layout::new(input_dim);
        if params.len() != layout.total
            || standardizer.mean.len() != input_dim
            || standardizer.inv_std.len() != input_dim
        {
            return Err(CnnError::CorruptPayload("tensor sizes do not match layout".into()));
        }
        if params.iter().chain(&standardizer.mean).chain(&standardizer.inv_std).any(|v| !v.is_finite()) {
            return Err(CnnError::CorruptPayload("non-finite weight".into()));
        }
        Ok(Self {
            layout,
            standardizer,
            params,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.layout.input_dim
    }

    /// Size of the flattened activation feeding the first dense layer.
    pub fn flatten_size(&self) -> usize {
        self.layout.flat
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn params(&self) -> &[f32] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f32] {
        &mut self.params
    }

    pub fn standardizer(&self) -> &Standardizer {
        &self.standardizer
    }

    /// Zero every weight and bias of the output layer.
    pub fn zero_output_layer(&mut self) {
        let r = self.layout.dense2();
        self.params[r].fill(0.0);
    }

    /// Raw logit for an input already in model layout.
    pub fn logit(&self, input: &[f64]) -> Result<f64, CnnError> {
        if input.len() != self.input_dim() {
            return Err(CnnError::ShapeMismatch {
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        let x = self.standardizer.apply(input);
        let mut cache = Cache::new(&self.layout);
        Ok(net::forward(&self.layout, &self.params, &x, &mut cache))
    }

    pub fn predict_input(&self, input: &[f64]) -> Result<Prediction, CnnError> {
        Ok(Prediction::from_probability(net::sigmoid(self.logit(input)?)))
    }
}

/// Score one feature vector.
pub fn forward(model: &CnnModel, features: &FeatureVector) -> Result<Prediction, CnnError> {
    if features.input_dim() != model.input_dim() {
        return Err(CnnError::ShapeMismatch {
            expected: model.input_dim(),
            got: features.input_dim(),
        });
    }
    Ok(model
        .predict_input(&features.input())?
        .for_segment(features.segment_id.clone()))
}
