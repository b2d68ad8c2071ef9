//! Slow, straightforward MFCC reference: direct DFT, per-bin triangle evaluation and a
//! direct cosine sum. Shares no code with the library.

use std::f64::consts::PI;

#[derive(Debug, Clone, Copy)]
pub struct Params {
    pub n_fft: usize,
    pub hop: usize,
    pub n_mels: usize,
    pub n_mfcc: usize,
    pub fmin: f64,
    pub fmax: Option<f64>,
    pub floor: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            n_fft: 2048,
            hop: 512,
            n_mels: 64,
            n_mfcc: 40,
            fmin: 0.0,
            fmax: None,
            floor: 1e-10,
        }
    }
}

fn mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn inv_mel(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// |DFT|^2 for bins 0..=n/2, summing with an exact twiddle table.
pub fn dft_power(frame: &[f64]) -> Vec<f64> {
    let n = frame.len();
    let cos: Vec<f64> = (0..n).map(|m| (2.0 * PI * m as f64 / n as f64).cos()).collect();
    let sin: Vec<f64> = (0..n).map(|m| (2.0 * PI * m as f64 / n as f64).sin()).collect();
    (0..=n / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, &x) in frame.iter().enumerate() {
                let m = (k * t) % n;
                re += x * cos[m];
                im -= x * sin[m];
            }
            re * re + im * im
        })
        .collect()
}

/// Dense triangle weights, one row per band.
pub fn filterbank(p: &Params, sr: u32) -> Vec<Vec<f64>> {
    let fmax = p.fmax.unwrap_or(sr as f64 / 2.0);
    let (lo, hi) = (mel(p.fmin), mel(fmax));
    let pts: Vec<f64> = (0..p.n_mels + 2)
        .map(|i| inv_mel(lo + (hi - lo) * i as f64 / (p.n_mels + 1) as f64))
        .collect();
    (0..p.n_mels)
        .map(|b| {
            let (l, c, r) = (pts[b], pts[b + 1], pts[b + 2]);
            (0..=p.n_fft / 2)
                .map(|k| {
                    let f = k as f64 * sr as f64 / p.n_fft as f64;
                    if f <= l || f >= r {
                        0.0
                    } else if f <= c {
                        (f - l) / (c - l)
                    } else {
                        (r - f) / (r - c)
                    }
                })
                .collect()
        })
        .collect()
}

pub fn mfcc_with(samples: &[f64], sr: u32, p: &Params) -> Vec<f64> {
    let n = p.n_fft;
    let window: Vec<f64> = (0..n).map(|i| (PI * i as f64 / n as f64).sin().powi(2)).collect();
    let bank = filterbank(p, sr);
    let frames = 1 + (samples.len() - n) / p.hop;
    let m = p.n_mels as f64;
    let mut acc = vec![0.0; p.n_mfcc];
    for f in 0..frames {
        let frame: Vec<f64> = (0..n).map(|i| samples[f * p.hop + i] * window[i]).collect();
        let power = dft_power(&frame);
        let logmel: Vec<f64> = bank
            .iter()
            .map(|row| row.iter().zip(&power).map(|(w, q)| w * q).sum::<f64>().max(p.floor).ln())
            .collect();
        for (k, a) in acc.iter_mut().enumerate() {
            let scale = if k == 0 { (1.0 / m).sqrt() } else { (2.0 / m).sqrt() };
            let s: f64 = logmel
                .iter()
                .enumerate()
                .map(|(i, v)| v * (PI * k as f64 * (i as f64 + 0.5) / m).cos())
                .sum();
            *a += scale * s;
        }
    }
    acc.iter().map(|a| a / frames as f64).collect()
}

pub fn mfcc(samples: &[f64], sr: u32) -> Vec<f64> {
    mfcc_with(samples, sr, &Params::default())
}

pub fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

/// `|a - b| <= rel * |b| + abs`
pub fn close(a: f64, b: f64, rel: f64, abs: f64) -> bool {
    (a - b).abs() <= rel * b.abs() + abs
}
