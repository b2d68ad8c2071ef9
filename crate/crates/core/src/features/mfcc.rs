use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::mel::{mel_filterbank, MelFilterbank};
use super::spectrum::{hann_window, SpectrumAnalyzer};
use super::{rms, FeatureError, FeatureVector, N_MFCC};
use crate::audio::AudioSegment;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MfccConfig {
    pub n_fft: usize,
    pub hop: usize,
    pub n_mels: usize,
    pub n_mfcc: usize,
    pub fmin: f64,
    /// Defaults to Nyquist when unset.
    pub fmax: Option<f64>,
    pub log_floor: f64,
    /// Append RMS to the CNN input (41 values instead of 40).
    pub include_rms: bool,
}

impl Default for MfccConfig {
    fn default() -> Self {
        Self {
            n_fft: 2048,
            hop: 512,
            n_mels: 64,
            n_mfcc: N_MFCC,
            fmin: 0.0,
            fmax: None,
            log_floor: 1e-10,
            include_rms: false,
        }
    }
}

impl MfccConfig {
    pub fn validate(&self) -> Result<(), FeatureError> {
        let bad = |m: &str| Err(FeatureError::InvalidConfig(m.to_string()));
        if self.n_mfcc != N_MFCC {
            return bad("n_mfcc is fixed at 40");
        }
        if self.n_mfcc > self.n_mels {
            return bad("n_mfcc must not exceed n_mels");
        }
        if !self.n_fft.is_power_of_two() {
            return bad("n_fft must be a power of two");
        }
        if self.hop == 0 || self.hop > self.n_fft {
            return bad("hop must be in 1..=n_fft");
        }
        if !(self.log_floor > 0.0) {
            return bad("log_floor must be positive");
        }
        Ok(())
    }
}

/// Orthonormal DCT-II: `c_k = s_k * sum_n x_n cos(pi k (2n+1) / 2N)` with
/// `s_0 = sqrt(1/N)`, `s_k = sqrt(2/N)`. Returns the first `n_out` coefficients.
pub fn dct_ii_orthonormal(input: &[f64], n_out: usize) -> Vec<f64> {
    let n = input.len() as f64;
    (0..n_out)
        .map(|k| {
            let scale = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
            scale
                * input
                    .iter()
                    .enumerate()
                    .map(|(i, x)| x * (PI * k as f64 * (2 * i + 1) as f64 / (2.0 * n)).cos())
                    .sum::<f64>()
        })
        .collect()
}

/// Precomputed window, FFT plan, filterbank and DCT basis for one sample rate.
///
/// Immutable after construction; share it across workers behind an `Arc`.
#[derive(Debug, Clone)]
pub struct MfccExtractor {
    config: MfccConfig,
    sample_rate: u32,
    window: Vec<f64>,
    analyzer: SpectrumAnalyzer,
    filterbank: MelFilterbank,
    dct_basis: Vec<Vec<f64>>,
}

impl MfccExtractor {
    pub fn new(config: MfccConfig, sample_rate: u32) -> Result<Self, FeatureError> {
        config.validate()?;
        let fmax = config.fmax.unwrap_or(sample_rate as f64 / 2.0);
        let filterbank =
            mel_filterbank(config.n_mels, config.n_fft, sample_rate, config.fmin, fmax)?;
        let m = config.n_mels as f64;
        let dct_basis = (0..config.n_mfcc)
            .map(|k| {
                let scale = if k == 0 { (1.0 / m).sqrt() } else { (2.0 / m).sqrt() };
                (0..config.n_mels)
                    .map(|i| scale * (PI * k as f64 * (2 * i + 1) as f64 / (2.0 * m)).cos())
                    .collect()
            })
            .collect();
        Ok(Self {
            window: hann_window(config.n_fft),
            analyzer: SpectrumAnalyzer::new(config.n_fft),
            filterbank,
            dct_basis,
            sample_rate,
            config,
        })
    }

    pub fn config(&self) -> &MfccConfig {
        &self.config
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn filterbank(&self) -> &MelFilterbank {
        &self.filterbank
    }

    /// Frame-mean MFCCs of a sample run at this extractor's rate.
    pub fn mfcc(&self, samples: &[f64]) -> Result<Vec<f64>, FeatureError> {
        let n_fft = self.config.n_fft;
        if samples.len() < n_fft {
            return Err(FeatureError::SegmentTooShort {
                need: n_fft,
                got: samples.len(),
            });
        }
        let n_frames = 1 + (samples.len() - n_fft) / self.config.hop;

        let mut frame = vec![0.0; n_fft];
        let mut scratch = vec![Complex::new(0.0, 0.0); n_fft];
        let mut power = vec![0.0; n_fft / 2 + 1];
        let mut mel = vec![0.0; self.config.n_mels];
        let mut sums = vec![0.0; self.config.n_mfcc];

        for f in 0..n_frames {
            let start = f * self.config.hop;
            for ((dst, &x), &w) in frame
                .iter_mut()
                .zip(&samples[start..start + n_fft])
                .zip(&self.window)
            {
                *dst = x * w;
            }
            self.analyzer
                .power_spectrum_into(&frame, &mut scratch, &mut power)?;
            self.filterbank.apply_into(&power, &mut mel);
            for m in mel.iter_mut() {
                *m = m.max(self.config.log_floor).ln();
            }
            for (acc, basis) in sums.iter_mut().zip(&self.dct_basis) {
                *acc += basis.iter().zip(&mel).map(|(b, m)| b * m).sum::<f64>();
            }
        }
        Ok(sums.into_iter().map(|s| s / n_frames as f64).collect())
    }

    pub fn extract(&self, segment: &AudioSegment) -> Result<FeatureVector, FeatureError> {
        if segment.sample_rate != self.sample_rate {
            return Err(FeatureError::InvalidConfig(format!(
                "segment at {} Hz, extractor built for {} Hz",
                segment.sample_rate, self.sample_rate
            )));
        }
        let level = rms(&segment.samples)?;
        let coeffs = self.mfcc(&segment.samples)?;
        FeatureVector::new(segment.id(), coeffs, level, self.config.include_rms)
    }
}

/// One-shot MFCC computation; builds a throwaway [`MfccExtractor`].
pub fn mfcc(segment: &AudioSegment, config: &MfccConfig) -> Result<Vec<f64>, FeatureError> {
    MfccExtractor::new(config.clone(), segment.sample_rate)?.mfcc(&segment.samples)
}

pub fn extract(segment: &AudioSegment, config: &MfccConfig) -> Result<FeatureVector, FeatureError> {
    MfccExtractor::new(config.clone(), segment.sample_rate)?.extract(segment)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn segment(samples: Vec<f64>) -> AudioSegment {
        AudioSegment {
            samples,
            sample_rate: 44_100,
            start_offset: 0.0,
            segment_index: 0,
            source_id: "unit".into(),
        }
    }

    fn chirp(n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| {
                let t = i as f64 / 44_100.0;
                0.05 * (2.0 * PI * (300.0 + 900.0 * t) * t).sin()
                    + 0.02 * (2.0 * PI * 2500.0 * t).sin()
            })
            .collect()
    }

    #[test]
    fn shape_is_forty() {
        let v = mfcc(&segment(chirp(10_000)), &MfccConfig::default()).unwrap();
        assert_eq!(v.len(), 40);
        assert!(v.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn silence_only_has_c0() {
        let cfg = MfccConfig::default();
        let v = mfcc(&segment(vec![0.0; 8_000]), &cfg).unwrap();
        let expected_c0 = (cfg.n_mels as f64).sqrt() * cfg.log_floor.ln();
        assert!((v[0] - expected_c0).abs() < 1e-9 * expected_c0.abs());
        for c in &v[1..] {
            assert!(c.abs() < 1e-9, "{c}");
        }
    }

    /// Chirp plus deterministic broadband noise so every mel band clears the log floor.
    fn broadband(n: usize) -> Vec<f64> {
        let mut state = 0x2545_f491_4f6c_dd1du64;
        chirp(n)
            .into_iter()
            .map(|v| {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                v + 0.01 * ((state >> 11) as f64 / (1u64 << 53) as f64 - 0.5)
            })
            .collect()
    }

    #[test]
    fn gain_only_moves_c0() {
        let cfg = MfccConfig::default();
        let x = broadband(20_000);
        let loud: Vec<f64> = x.iter().map(|v| v * 10.0).collect();
        let a = extract(&segment(x), &cfg).unwrap();
        let b = extract(&segment(loud), &cfg).unwrap();
        assert!((b.rms() - 10.0 * a.rms()).abs() < 1e-12);
        let shift = (cfg.n_mels as f64).sqrt() * 100f64.ln();
        assert!((b.mfcc()[0] - a.mfcc()[0] - shift).abs() < 1e-9);
        for k in 1..40 {
            assert!((a.mfcc()[k] - b.mfcc()[k]).abs() < 1e-9, "coefficient {k}");
        }
    }

    #[test]
    fn too_short() {
        let err = mfcc(&segment(vec![0.1; 100]), &MfccConfig::default()).unwrap_err();
        assert_eq!(err, FeatureError::SegmentTooShort { need: 2048, got: 100 });
    }

    #[test]
    fn config_validation() {
        let mut cfg = MfccConfig::default();
        cfg.n_fft = 1000;
        assert!(cfg.validate().is_err());
        let mut cfg = MfccConfig::default();
        cfg.n_mels = 32;
        assert!(cfg.validate().is_err());
        let mut cfg = MfccConfig::default();
        cfg.hop = 4096;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn dct_of_constant() {
        let c = dct_ii_orthonormal(&[2.0; 16], 5);
        assert!((c[0] - 8.0).abs() < 1e-12);
        assert!(c[1..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn extractor_matches_free_function() {
        let cfg = MfccConfig::default();
        let seg = segment(chirp(12_345));
        let ex = MfccExtractor::new(cfg.clone(), 44_100).unwrap();
        assert_eq!(ex.mfcc(&seg.samples).unwrap(), mfcc(&seg, &cfg).unwrap());
    }
}
