use serde::{Deserialize, Serialize};

use super::{AudioClip, AudioError, AudioSegment};

/// Silence-gating parameters for cutting speech into sentence-sized segments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmenterConfig {
    /// Frames at or above this level (dBFS, full scale = amplitude 1.0) are speech.
    pub silence_threshold_dbfs: f64,
    /// A segment closes after this much continuous silence.
    pub max_silence_s: f64,
    pub frame_ms: f64,
    /// Shorter segments are dropped.
    pub min_segment_ms: f64,
}

impl Default for SegmenterConfig {
    fn default() -> Self {
        Self {
            silence_threshold_dbfs: -40.0,
            max_silence_s: 2.0,
            frame_ms: 20.0,
            min_segment_ms: 300.0,
        }
    }
}

impl SegmenterConfig {
    pub fn validate(&self) -> Result<(), AudioError> {
        if !(self.silence_threshold_dbfs < 0.0) {
            return Err(AudioError::InvalidConfig(
                "silence_threshold_dbfs must be negative".into(),
            ));
        }
        if !(self.max_silence_s > 0.0) {
            return Err(AudioError::InvalidConfig("max_silence_s must be positive".into()));
        }
        if !(self.frame_ms > 0.0) {
            return Err(AudioError::InvalidConfig("frame_ms must be positive".into()));
        }
        if !(self.min_segment_ms >= 0.0) {
            return Err(AudioError::InvalidConfig(
                "min_segment_ms must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// `20 log10(rms)` of a frame; `-inf` for digital silence.
pub fn frame_level_dbfs(frame: &[f64]) -> f64 {
    if frame.is_empty() {
        return f64::NEG_INFINITY;
    }
    let mean_sq = frame.iter().map(|x| x * x).sum::<f64>() / frame.len() as f64;
    20.0 * mean_sq.sqrt().log10()
}

/// Split a clip into speech segments separated by long silences.
///
/// Segments span from the first to the last active frame of each run; runs are broken
/// once `max_silence_s` of consecutive inactive frames has been seen.
pub fn segment_on_silence(
    clip: &AudioClip,
    config: &SegmenterConfig,
) -> Result<Vec<AudioSegment>, AudioError> {
    config.validate()?;
    let rate = clip.sample_rate() as f64;
    let samples = clip.samples();
    let frame_len = ((rate * config.frame_ms / 1000.0).round() as usize).max(1);
    let silence_limit = (config.max_silence_s * rate).ceil() as usize;
    let min_len = (config.min_segment_ms / 1000.0 * rate).ceil() as usize;

    // (start, end) sample ranges of closed runs
    let mut spans: Vec<(usize, usize)> = Vec::new();
    let mut open: Option<(usize, usize)> = None;
    let mut silent_run = 0usize;

    for (i, frame) in samples.chunks(frame_len).enumerate() {
        let start = i * frame_len;
        let end = start + frame.len();
        let active = frame_level_dbfs(frame) >= config.silence_threshold_dbfs;
        if active {
            silent_run = 0;
            open = Some(match open {
                Some((s, _)) => (s, end),
                None => (start, end),
            });
        } else if let Some(span) = open {
            silent_run += frame.len();
            if silent_run >= silence_limit {
                spans.push(span);
                open = None;
                silent_run = 0;
            }
        }
    }
    spans.extend(open);

    let segments = spans
        .into_iter()
        .filter(|(s, e)| e - s >= min_len)
        .enumerate()
        .map(|(index, (s, e))| AudioSegment {
            samples: samples[s..e].to_vec(),
            sample_rate: clip.sample_rate(),
            start_offset: s as f64 / rate,
            segment_index: index,
            source_id: clip.source_id().to_string(),
        })
        .collect();
    Ok(segments)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const RATE: u32 = 44_100;

    fn tone(seconds: f64) -> Vec<f64> {
        let n = (seconds * RATE as f64) as usize;
        (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * 440.0 * i as f64 / RATE as f64).sin())
            .collect()
    }

    fn silence(seconds: f64) -> Vec<f64> {
        vec![0.0; (seconds * RATE as f64) as usize]
    }

    fn clip(parts: &[Vec<f64>]) -> AudioClip {
        AudioClip::new(parts.concat(), RATE, "t").unwrap()
    }

    /// Direct per-frame energy oracle: which 20 ms frames are loud.
    fn active_frames(samples: &[f64], threshold: f64) -> Vec<bool> {
        let frame = (RATE as f64 * 0.02).round() as usize;
        samples
            .chunks(frame)
            .map(|f| {
                let rms = (f.iter().map(|x| x * x).sum::<f64>() / f.len() as f64).sqrt();
                rms > 0.0 && 20.0 * rms.log10() >= threshold
            })
            .collect()
    }

    #[test]
    fn all_silence_yields_nothing() {
        let segs = segment_on_silence(&clip(&[silence(5.0)]), &SegmenterConfig::default()).unwrap();
        assert!(segs.is_empty());
    }

    #[test]
    fn long_gap_splits() {
        let c = clip(&[tone(1.0), silence(3.0), tone(1.0)]);
        let frames = active_frames(c.samples(), -40.0);
        assert_eq!(frames.iter().filter(|&&a| a).count(), 100);
        let segs = segment_on_silence(&c, &SegmenterConfig::default()).unwrap();
        assert_eq!(segs.len(), 2);
        let frame = 0.02;
        assert!(segs[0].start_offset.abs() <= frame);
        assert!((segs[0].end_offset() - 1.0).abs() <= frame);
        assert!((segs[1].start_offset - 4.0).abs() <= frame);
        assert!((segs[1].end_offset() - 5.0).abs() <= frame);
        assert_eq!(segs[1].segment_index, 1);
    }

    #[test]
    fn short_gap_keeps_one_segment() {
        let c = clip(&[tone(1.0), silence(1.0), tone(1.0)]);
        let segs = segment_on_silence(&c, &SegmenterConfig::default()).unwrap();
        assert_eq!(segs.len(), 1);
        assert!(segs[0].start_offset.abs() <= 0.02);
        assert!((segs[0].end_offset() - 3.0).abs() <= 0.02);
    }

    #[test]
    fn frame_at_threshold_is_active() {
        // 0.01 amplitude square wave has rms 0.01 -> exactly -40 dBFS.
        let square: Vec<f64> = (0..RATE).map(|i| if i % 2 == 0 { 0.01 } else { -0.01 }).collect();
        let level = frame_level_dbfs(&square[..882]);
        assert!((level - -40.0).abs() < 1e-9);
        let config = SegmenterConfig {
            silence_threshold_dbfs: level,
            ..SegmenterConfig::default()
        };
        let segs = segment_on_silence(&clip(&[square]), &config).unwrap();
        assert_eq!(segs.len(), 1);
    }

    #[test]
    fn clicks_are_dropped() {
        let c = clip(&[silence(1.0), tone(0.1), silence(3.0)]);
        let segs = segment_on_silence(&c, &SegmenterConfig::default()).unwrap();
        assert!(segs.is_empty());
    }

    #[test]
    fn rejects_bad_config() {
        let c = clip(&[tone(0.5)]);
        let bad = SegmenterConfig {
            silence_threshold_dbfs: 3.0,
            ..SegmenterConfig::default()
        };
        assert!(segment_on_silence(&c, &bad).is_err());
        let bad = SegmenterConfig {
            frame_ms: 0.0,
            ..SegmenterConfig::default()
        };
        assert!(segment_on_silence(&c, &bad).is_err());
    }

    fn bursty_signal() -> impl Strategy<Value = Vec<f64>> {
        // Sequences of 50 ms blocks with random amplitudes, some silent.
        prop::collection::vec(prop_oneof![Just(0.0), 0.0001f64..0.02, 0.02f64..0.9], 10..160)
            .prop_map(|amps| {
                let block = 2_205;
                amps.iter()
                    .flat_map(|&a| {
                        (0..block).map(move |i| if i % 2 == 0 { a } else { -a })
                    })
                    .collect()
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn segments_ordered_and_disjoint(signal in bursty_signal(), thr in -70.0f64..-10.0) {
            let c = AudioClip::new(signal, RATE, "p").unwrap();
            let config = SegmenterConfig { silence_threshold_dbfs: thr, max_silence_s: 0.3, ..SegmenterConfig::default() };
            let segs = segment_on_silence(&c, &config).unwrap();
            let again = segment_on_silence(&c, &config).unwrap();
            prop_assert_eq!(&segs, &again);
            for pair in segs.windows(2) {
                prop_assert!(pair[0].start_offset < pair[1].start_offset);
                prop_assert!(pair[0].end_offset() <= pair[1].start_offset + 1e-12);
            }
            for s in &segs {
                prop_assert!(s.duration_s() * 1000.0 >= config.min_segment_ms - 1e-9);
            }
        }

        #[test]
        fn lower_threshold_never_shrinks_activity(signal in bursty_signal(), thr in -60.0f64..-10.0, delta in 0.0f64..30.0) {
            let c = AudioClip::new(signal, RATE, "p").unwrap();
            let base = SegmenterConfig { silence_threshold_dbfs: thr, max_silence_s: 0.3, ..SegmenterConfig::default() };
            let lower = SegmenterConfig { silence_threshold_dbfs: thr - delta, ..base };
            let total = |cfg: &SegmenterConfig| -> usize {
                segment_on_silence(&c, cfg).unwrap().iter().map(|s| s.samples.len()).sum()
            };
            prop_assert!(total(&lower) >= total(&base));
        }
    }
}
