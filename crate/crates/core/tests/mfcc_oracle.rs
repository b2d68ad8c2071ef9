mod common;

use common::fixtures::{mix, noise, segment, tone, voiced, SR};
use common::oracle;
use voxguard::features::{extract, mel_filterbank, mfcc, MfccConfig, MfccExtractor};

fn assert_matches(got: &[f64], want: &[f64], what: &str) {
    assert_eq!(got.len(), want.len());
    for (k, (a, b)) in got.iter().zip(want).enumerate() {
        assert!(oracle::close(*a, *b, 1e-6, 1e-12), "{what}: coefficient {k}: {a} vs {b}");
    }
}

#[test]
fn filterbank_matches_dense_oracle() {
    let p = oracle::Params::default();
    let want = oracle::filterbank(&p, SR);
    let got = mel_filterbank(64, 2048, SR, 0.0, SR as f64 / 2.0).unwrap().to_dense();
    for (b, (g, w)) in got.iter().zip(&want).enumerate() {
        for (k, (x, y)) in g.iter().zip(w).enumerate() {
            assert!((x - y).abs() < 1e-12, "band {b} bin {k}: {x} vs {y}");
        }
    }
}

#[test]
fn dft_oracle_sanity() {
    // A bin-centred cosine puts n^2/4 into its bin.
    let n = 64;
    let x: Vec<f64> = (0..n).map(|i| (2.0 * std::f64::consts::PI * 5.0 * i as f64 / n as f64).cos()).collect();
    let p = oracle::dft_power(&x);
    assert!((p[5] - (n * n) as f64 / 4.0).abs() < 1e-9);
    assert!(p[6] < 1e-18);
}

#[test]
fn default_config_matches_oracle() {
    let sig = mix(&[&voiced(180.0, 0.2, 1), &noise(0.2, 0.02, 2)]);
    let got = mfcc(&segment("a", 0, sig.clone()), &MfccConfig::default()).unwrap();
    assert_matches(&got, &oracle::mfcc(&sig, SR), "voiced");
}

#[test]
fn narrower_band_and_fewer_mels_match_oracle() {
    let sig = mix(&[&tone(900.0, 0.15, 0.3), &noise(0.15, 0.05, 9)]);
    let cfg = MfccConfig {
        n_fft: 1024,
        hop: 256,
        n_mels: 48,
        n_mfcc: 40,
        fmin: 80.0,
        fmax: Some(8000.0),
        ..MfccConfig::default()
    };
    let p = oracle::Params {
        n_fft: 1024,
        hop: 256,
        n_mels: 48,
        n_mfcc: 40,
        fmin: 80.0,
        fmax: Some(8000.0),
        ..oracle::Params::default()
    };
    let got = MfccExtractor::new(cfg, SR).unwrap().mfcc(&sig).unwrap();
    assert_matches(&got, &oracle::mfcc_with(&sig, SR, &p), "custom");
}

#[test]
fn extracted_vector_carries_rms() {
    let sig = mix(&[&tone(440.0, 0.1, 0.5), &noise(0.1, 0.01, 4)]);
    let fv = extract(&segment("clip", 3, sig.clone()), &MfccConfig::default()).unwrap();
    assert_eq!(fv.segment_id, "clip#3");
    assert!((fv.rms() - oracle::rms(&sig)).abs() < 1e-15);
    assert_eq!(fv.input().len(), 40);
    let with_rms = extract(
        &segment("clip", 3, sig),
        &MfccConfig { include_rms: true, ..MfccConfig::default() },
    )
    .unwrap();
    assert_eq!(with_rms.input().len(), 41);
    assert_eq!(*with_rms.input().last().unwrap(), fv.rms());
}
