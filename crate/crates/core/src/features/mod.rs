//! RMS and 40-coefficient MFCC features for one audio segment.
//!
//! The MFCC path is: frame -> Hann window -> power spectrum -> mel filterbank ->
//! natural log (floored) -> orthonormal DCT-II, keeping coefficients `0..40`, then the
//! per-coefficient mean over frames.

mod csv_io;
mod mel;
mod mfcc;
mod spectrum;

pub use csv_io::{read_feature_csv, write_feature_csv, LabeledFeatures};
pub use mel::{hz_to_mel, mel_filterbank, mel_to_hz, MelBand, MelFilterbank};
pub use mfcc::{dct_ii_orthonormal, extract, mfcc, MfccConfig, MfccExtractor};
pub use spectrum::{hann_window, power_spectrum, SpectrumAnalyzer};

use serde::{Deserialize, Serialize};

/// Number of cepstral coefficients fed to the CNN.
pub const N_MFCC: usize = 40;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FeatureError {
    #[error("empty input")]
    EmptyInput,
    #[error("frame length {got} does not match n_fft {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("segment has {got} samples, need at least n_fft = {need}")]
    SegmentTooShort { need: usize, got: usize },
    #[error("mel band {band} has no positive weight; too many mel bands for n_fft = {n_fft}")]
    DegenerateBands { band: usize, n_fft: usize },
    #[error("invalid MFCC config: {0}")]
    InvalidConfig(String),
    #[error("malformed feature CSV: {0}")]
    Csv(String),
}

/// Root mean square: `sqrt(sum(x^2) / N)`.
pub fn rms(samples: &[f64]) -> Result<f64, FeatureError> {
    if samples.is_empty() {
        return Err(FeatureError::EmptyInput);
    }
    let sum_sq: f64 = samples.iter().map(|x| x * x).sum();
    Ok((sum_sq / samples.len() as f64).sqrt())
}

/// Features for one segment: frame-mean MFCCs plus RMS.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub segment_id: String,
    mfcc: Vec<f64>,
    rms: f64,
    /// When set, RMS is appended as a 41st CNN input.
    pub includes_rms_in_input: bool,
}

impl FeatureVector {
    pub fn new(
        segment_id: impl Into<String>,
        mfcc: Vec<f64>,
        rms: f64,
        includes_rms_in_input: bool,
    ) -> Result<Self, FeatureError> {
        if mfcc.len() != N_MFCC {
            return Err(FeatureError::InvalidConfig(format!(
                "feature vector needs {N_MFCC} coefficients, got {}",
                mfcc.len()
            )));
        }
        if !(rms >= 0.0) || !rms.is_finite() || mfcc.iter().any(|v| !v.is_finite()) {
            return Err(FeatureError::InvalidConfig(
                "feature values must be finite with rms >= 0".into(),
            ));
        }
        Ok(Self {
            segment_id: segment_id.into(),
            mfcc,
            rms,
            includes_rms_in_input,
        })
    }

    pub fn mfcc(&self) -> &[f64] {
        &self.mfcc
    }

    pub fn rms(&self) -> f64 {
        self.rms
    }

    pub fn with_rms_input(mut self, include: bool) -> Self {
        self.includes_rms_in_input = include;
        self
    }

    /// Width of [`FeatureVector::input`]: 40 or 41.
    pub fn input_dim(&self) -> usize {
        N_MFCC + usize::from(self.includes_rms_in_input)
    }

    /// CNN input layout: the 40 MFCCs, then RMS if enabled.
    pub fn input(&self) -> Vec<f64> {
        let mut v = self.mfcc.clone();
        if self.includes_rms_in_input {
            v.push(self.rms);
        }
        v
    }
}
