use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::FeatureError;

/// Periodic Hann window of length `n`.
pub fn hann_window(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// Reusable FFT plan for one frame size.
#[derive(Clone)]
pub struct SpectrumAnalyzer {
    n_fft: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SpectrumAnalyzer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectrumAnalyzer")
            .field("n_fft", &self.n_fft)
            .finish()
    }
}

impl SpectrumAnalyzer {
    pub fn new(n_fft: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(n_fft);
        Self { n_fft, fft }
    }

    pub fn n_fft(&self) -> usize {
        self.n_fft
    }

    /// `|X[k]|^2` for `k = 0..=n_fft/2`. The frame is used as given (window it first).
    pub fn power_spectrum(&self, frame: &[f64]) -> Result<Vec<f64>, FeatureError> {
        let mut scratch = vec![Complex::new(0.0, 0.0); self.n_fft];
        let mut out = vec![0.0; self.n_fft / 2 + 1];
        self.power_spectrum_into(frame, &mut scratch, &mut out)?;
        Ok(out)
    }

    pub(crate) fn power_spectrum_into(
        &self,
        frame: &[f64],
        scratch: &mut [Complex<f64>],
        out: &mut [f64],
    ) -> Result<(), FeatureError> {
        if frame.len() != self.n_fft {
            return Err(FeatureError::LengthMismatch {
                expected: self.n_fft,
                got: frame.len(),
            });
        }
        for (c, &x) in scratch.iter_mut().zip(frame) {
            *c = Complex::new(x, 0.0);
        }
        self.fft.process(scratch);
        for (o, c) in out.iter_mut().zip(scratch.iter()) {
            *o = c.norm_sqr();
        }
        Ok(())
    }
}

/// One-shot power spectrum of an already windowed frame of length `n_fft`.
pub fn power_spectrum(frame: &[f64], n_fft: usize) -> Result<Vec<f64>, FeatureError> {
    SpectrumAnalyzer::new(n_fft).power_spectrum(frame)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn direct_dft_power(frame: &[f64]) -> Vec<f64> {
        let n = frame.len();
        (0..=n / 2)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (t, &x) in frame.iter().enumerate() {
                    let angle = -2.0 * PI * (k * t % n) as f64 / n as f64;
                    re += x * angle.cos();
                    im += x * angle.sin();
                }
                re * re + im * im
            })
            .collect()
    }

    #[test]
    fn zero_frame_has_zero_spectrum() {
        let p = power_spectrum(&[0.0; 64], 64).unwrap();
        assert_eq!(p.len(), 33);
        assert!(p.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn cosine_energy_at_its_bin() {
        let n = 256;
        let k = 17;
        let frame: Vec<f64> = (0..n)
            .map(|t| (2.0 * PI * k as f64 * t as f64 / n as f64).cos())
            .collect();
        let p = power_spectrum(&frame, n).unwrap();
        let oracle = direct_dft_power(&frame);
        // (n/2)^2 at bin k, numerically zero elsewhere
        assert!((p[k] - (n as f64 / 2.0).powi(2)).abs() < 1e-6);
        assert!((oracle[k] - p[k]).abs() < 1e-6);
        let leak: f64 = p.iter().enumerate().filter(|(i, _)| *i != k).map(|(_, v)| v).sum();
        assert!(leak < 1e-12 * p[k]);
    }

    #[test]
    fn random_frame_matches_direct_dft() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [64, 512, 2048] {
            let window = hann_window(n);
            let frame: Vec<f64> = window.iter().map(|w| w * rng.gen_range(-1.0..1.0)).collect();
            let fast = power_spectrum(&frame, n).unwrap();
            let slow = direct_dft_power(&frame);
            let scale = slow.iter().cloned().fold(0.0, f64::max);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() <= 1e-9 * b.abs().max(scale * 1e-3), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn length_mismatch() {
        assert_eq!(
            power_spectrum(&[0.0; 10], 16),
            Err(FeatureError::LengthMismatch { expected: 16, got: 10 })
        );
    }

    #[test]
    fn hann_is_periodic() {
        let w = hann_window(8);
        assert_eq!(w[0], 0.0);
        assert!((w[4] - 1.0).abs() < 1e-15);
        assert!((w[1] - w[7]).abs() < 1e-15);
    }
}
