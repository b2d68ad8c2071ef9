//! Compute frame-mean MFCCs and RMS for a segment and write them as a feature CSV row.
//!
//! cargo run --example mfcc_features

use voxguard::audio::AudioSegment;
use voxguard::features::{extract, write_feature_csv, LabeledFeatures, MfccConfig};
use voxguard::Label;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sr = 44_100;
    let samples: Vec<f64> = (0..sr / 2)
        .map(|i| {
            let t = i as f64 / sr as f64;
            (1..=5).map(|k| 0.08 * (2.0 * std::f64::consts::PI * 150.0 * k as f64 * t).sin() / k as f64).sum()
        })
        .collect();
    let segment = AudioSegment {
        samples,
        sample_rate: sr as u32,
        start_offset: 0.0,
        segment_index: 0,
        source_id: "demo".into(),
    };
    let config = MfccConfig::default();
    let fv = extract(&segment, &config)?;
    println!("segment {}: rms {:.4}", fv.segment_id, fv.rms());
    for (k, c) in fv.mfcc().iter().take(8).enumerate() {
        println!("  mfcc_{k:<2} {c:>10.4}");
    }
    println!("  ... {} coefficients in total\n", fv.mfcc().len());

    let row = LabeledFeatures { features: fv, label: Some(Label::NonHate) };
    write_feature_csv(std::io::stdout().lock(), &[row])?;
    Ok(())
}
