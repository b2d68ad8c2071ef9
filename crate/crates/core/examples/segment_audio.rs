//! Cut a clip into speech segments on silence.
//!
//! cargo run --example segment_audio [path/to/clip.wav]

use voxguard::audio::{read_wav, resample, segment_on_silence, AudioClip, SegmenterConfig, CANONICAL_RATE};

fn synthetic() -> AudioClip {
    // Two utterances separated by 2.5 s of silence, at 16 kHz.
    let sr = 16_000;
    let burst = |f: f64, secs: f64| -> Vec<f64> {
        (0..(secs * sr as f64) as usize)
            .map(|i| 0.3 * (2.0 * std::f64::consts::PI * f * i as f64 / sr as f64).sin())
            .collect()
    };
    let mut s = vec![0.0; sr / 2];
    s.extend(burst(180.0, 1.2));
    s.extend(vec![0.0; sr * 5 / 2]);
    s.extend(burst(240.0, 0.8));
    s.extend(vec![0.0; sr / 4]);
    AudioClip::new(s, sr as u32, "synthetic").unwrap()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let clip = match std::env::args().nth(1) {
        Some(path) => read_wav(path)?,
        None => synthetic(),
    };
    let clip = resample(&clip, CANONICAL_RATE);
    let config = SegmenterConfig::default();
    println!(
        "{}: {:.2} s at {} Hz, threshold {} dBFS, max silence {} s",
        clip.source_id(),
        clip.duration_s(),
        clip.sample_rate(),
        config.silence_threshold_dbfs,
        config.max_silence_s
    );
    for seg in segment_on_silence(&clip, &config)? {
        println!("{:<16} {:>7.3} s .. {:>7.3} s", seg.id(), seg.start_offset, seg.end_offset());
    }
    Ok(())
}
