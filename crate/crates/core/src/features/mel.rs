use super::FeatureError;

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// One triangular filter, stored as its non-zero run of FFT-bin weights.
#[derive(Debug, Clone, PartialEq)]
pub struct MelBand {
    pub lower_hz: f64,
    pub center_hz: f64,
    pub upper_hz: f64,
    pub start_bin: usize,
    pub weights: Vec<f64>,
}

impl MelBand {
    pub fn apply(&self, power: &[f64]) -> f64 {
        power[self.start_bin..self.start_bin + self.weights.len()]
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| p * w)
            .sum()
    }
}

/// `n_mels x (n_fft/2 + 1)` triangular filterbank, kept sparse.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank {
    n_bins: usize,
    bands: Vec<MelBand>,
}

impl MelFilterbank {
    pub fn bands(&self) -> &[MelBand] {
        &self.bands
    }

    pub fn n_mels(&self) -> usize {
        self.bands.len()
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    /// Dense row-major copy, mostly for inspection and tests.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        self.bands
            .iter()
            .map(|b| {
                let mut row = vec![0.0; self.n_bins];
                row[b.start_bin..b.start_bin + b.weights.len()].copy_from_slice(&b.weights);
                row
            })
            .collect()
    }

    pub fn apply_into(&self, power: &[f64], out: &mut [f64]) {
        for (o, band) in out.iter_mut().zip(&self.bands) {
            *o = band.apply(power);
        }
    }
}

/// Build peak-normalised triangular filters whose edges and centres are evenly spaced on
/// the `2595 log10(1 + f/700)` mel scale between `fmin` and `fmax`.
pub fn mel_filterbank(
    n_mels: usize,
    n_fft: usize,
    sample_rate: u32,
    fmin: f64,
    fmax: f64,
) -> Result<MelFilterbank, FeatureError> {
    let nyquist = sample_rate as f64 / 2.0;
    if n_mels == 0 || n_fft < 2 {
        return Err(FeatureError::InvalidConfig(
            "need n_mels > 0 and n_fft >= 2".into(),
        ));
    }
    if !(fmin >= 0.0 && fmin < fmax && fmax <= nyquist) {
        return Err(FeatureError::InvalidConfig(format!(
            "need 0 <= fmin < fmax <= {nyquist} Hz, got fmin={fmin} fmax={fmax}"
        )));
    }

    let n_bins = n_fft / 2 + 1;
    let bin_hz = sample_rate as f64 / n_fft as f64;
    let (mel_lo, mel_hi) = (hz_to_mel(fmin), hz_to_mel(fmax));
    let step = (mel_hi - mel_lo) / (n_mels + 1) as f64;
    let edges: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(mel_lo + step * i as f64))
        .collect();

    let mut bands = Vec::with_capacity(n_mels);
    for (band, w) in edges.windows(3).enumerate() {
        let (lo, center, hi) = (w[0], w[1], w[2]);
        let weight = |k: usize| {
            let f = k as f64 * bin_hz;
            let up = (f - lo) / (center - lo);
            let down = (hi - f) / (hi - center);
            up.min(down).max(0.0)
        };
        let first = (lo / bin_hz).floor() as usize;
        let last = ((hi / bin_hz).ceil() as usize).min(n_bins - 1);
        let mut start = None;
        let mut weights = Vec::new();
        for k in first..=last {
            let v = weight(k);
            if v > 0.0 {
                start.get_or_insert(k);
                weights.push(v);
            } else if start.is_some() {
                break;
            }
        }
        let Some(start_bin) = start else {
            return Err(FeatureError::DegenerateBands { band, n_fft });
        };
        bands.push(MelBand {
            lower_hz: lo,
            center_hz: center,
            upper_hz: hi,
            start_bin,
            weights,
        });
    }
    Ok(MelFilterbank { n_bins, bands })
}
