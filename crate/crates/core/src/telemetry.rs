//! Per-stage latency recording and min/mean/max/share summaries.

use std::fmt;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TelemetryError {
    #[error("stage duration must be finite and non-negative, got {0}")]
    InvalidDuration(f64),
    #[error("no timings recorded for stage {0}")]
    MissingStage(Stage),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Transcription,
    LlmAnalysis,
    AudioExtraction,
    AudioPrediction,
}

impl Stage {
    pub const ALL: [Stage; 4] = [
        Stage::Transcription,
        Stage::LlmAnalysis,
        Stage::AudioExtraction,
        Stage::AudioPrediction,
    ];

    pub fn title(self) -> &'static str {
        match self {
            Stage::Transcription => "Transcription",
            Stage::LlmAnalysis => "LLM Analysis",
            Stage::AudioExtraction => "Audio Extraction",
            Stage::AudioPrediction => "Audio Prediction",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.title())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: Stage,
    /// Seconds.
    duration: f64,
    pub segment_id: String,
}

impl StageTiming {
    pub fn new(stage: Stage, duration: f64, segment_id: impl Into<String>) -> Result<Self, TelemetryError> {
        if !duration.is_finite() || duration < 0.0 {
            return Err(TelemetryError::InvalidDuration(duration));
        }
        Ok(Self {
            stage,
            duration,
            segment_id: segment_id.into(),
        })
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }
}

/// Append-only, thread-safe timing log.
#[derive(Debug, Default)]
pub struct TimingStore {
    timings: Mutex<Vec<StageTiming>>,
}

impl TimingStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&self, timing: StageTiming) {
        self.timings.lock().unwrap().push(timing);
    }

    pub fn extend(&self, timings: impl IntoIterator<Item = StageTiming>) {
        self.timings.lock().unwrap().extend(timings);
    }

    /// Consistent copy in insertion order.
    pub fn snapshot(&self) -> Vec<StageTiming> {
        self.timings.lock().unwrap().clone()
    }

    pub fn len(&self) -> usize {
        self.timings.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn summarize(&self) -> Result<LatencyReport, TelemetryError> {
        summarize(&self.snapshot())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    pub stage: Stage,
    pub count: usize,
    pub min: f64,
    pub mean: f64,
    pub max: f64,
    /// Percent of the summed stage means.
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    pub stages: Vec<StageSummary>,
    pub total_mean: f64,
    pub sample_count: usize,
}

impl LatencyReport {
    pub fn stage(&self, stage: Stage) -> &StageSummary {
        self.stages
            .iter()
            .find(|s| s.stage == stage)
            .expect("report covers every stage")
    }

    /// Plain table: one row per stage with Min/Mean/Max seconds and share of total.
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<18}{:>10}{:>10}{:>10}{:>10}\n",
            "Process", "Min(s)", "Mean(s)", "Max(s)", "Share(%)"
        );
        for s in &self.stages {
            out.push_str(&format!(
                "{:<18}{:>10.4}{:>10.4}{:>10.4}{:>10.2}\n",
                s.stage.title(),
                s.min,
                s.mean,
                s.max,
                s.share
            ));
        }
        out.push_str(&format!("{:<18}{:>10}{:>10.4}\n", "Total", "", self.total_mean));
        out
    }
}

/// Order-independent sum: sort, then compensated summation.
fn stable_sum(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let mut sum = 0.0;
    let mut carry = 0.0;
    for &v in values.iter() {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// Exact min/mean/max per stage over every timing; no sampling.
pub fn summarize(timings: &[StageTiming]) -> Result<LatencyReport, TelemetryError> {
    let mut stages = Vec::with_capacity(Stage::ALL.len());
    for stage in Stage::ALL {
        let mut values: Vec<f64> = timings
            .iter()
            .filter(|t| t.stage == stage)
            .map(|t| t.duration)
            .collect();
        if values.is_empty() {
            return Err(TelemetryError::MissingStage(stage));
        }
        let count = values.len();
        let mean = stable_sum(&mut values) / count as f64;
        stages.push(StageSummary {
            stage,
            count,
            min: values[0],
            mean,
            max: values[count - 1],
            share: 0.0,
        });
    }
    let mut means: Vec<f64> = stages.iter().map(|s| s.mean).collect();
    let total_mean = stable_sum(&mut means);
    for s in &mut stages {
        s.share = if total_mean > 0.0 {
            s.mean / total_mean * 100.0
        } else {
            100.0 / Stage::ALL.len() as f64
        };
    }
    Ok(LatencyReport {
        stages,
        total_mean,
        sample_count: timings.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t(stage: Stage, d: f64) -> StageTiming {
        StageTiming::new(stage, d, "s").unwrap()
    }

    fn one_each(values: [f64; 4]) -> Vec<StageTiming> {
        Stage::ALL.iter().zip(values).map(|(&s, v)| t(s, v)).collect()
    }

    #[test]
    fn single_sample() {
        let r = summarize(&one_each([0.7, 0.2, 0.01, 0.05])).unwrap();
        let s = r.stage(Stage::Transcription);
        assert_eq!((s.min, s.mean, s.max), (0.7, 0.7, 0.7));
    }

    #[test]
    fn negative_duration_rejected() {
        assert_eq!(
            StageTiming::new(Stage::LlmAnalysis, -0.1, "x"),
            Err(TelemetryError::InvalidDuration(-0.1))
        );
        assert!(StageTiming::new(Stage::LlmAnalysis, f64::NAN, "x").is_err());
    }

    #[test]
    fn min_mean_max() {
        let mut timings = one_each([0.0, 0.1, 0.1, 0.1]);
        timings.retain(|x| x.stage != Stage::Transcription);
        timings.extend([1.0, 2.0, 3.0].map(|d| t(Stage::Transcription, d)));
        let r = summarize(&timings).unwrap();
        let s = r.stage(Stage::Transcription);
        assert_eq!((s.min, s.mean, s.max, s.count), (1.0, 2.0, 3.0, 3));
    }

    #[test]
    fn table_three_shares() {
        let r = summarize(&one_each([0.95, 0.48, 0.019, 0.055])).unwrap();
        assert!((r.total_mean - 1.504).abs() < 1e-12);
        assert!((r.stage(Stage::Transcription).share - 63.164893617).abs() < 1e-6);
        assert!((r.stage(Stage::LlmAnalysis).share - 31.914893617).abs() < 1e-6);
        let table = r.to_table();
        assert!(table.contains("LLM Analysis"));
        assert!(table.lines().next().unwrap().contains("Share(%)"));
    }

    #[test]
    fn missing_stage() {
        let mut timings = one_each([1.0; 4]);
        timings.retain(|x| x.stage != Stage::AudioPrediction);
        assert_eq!(summarize(&timings), Err(TelemetryError::MissingStage(Stage::AudioPrediction)));
    }

    #[test]
    fn many_records_are_exact() {
        let store = TimingStore::new();
        for i in 0..10_000 {
            for s in Stage::ALL {
                store.record(t(s, (i % 100) as f64 / 1000.0));
            }
        }
        let r = store.summarize().unwrap();
        assert_eq!(r.sample_count, 40_000);
        let s = r.stage(Stage::AudioExtraction);
        assert_eq!(s.min, 0.0);
        assert_eq!(s.max, 0.099);
        assert!((s.mean - 0.0495).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn permutation_invariant_and_shares_sum(
            mut values in prop::collection::vec((0usize..4, 0.0f64..3.0), 4..60),
            seed in any::<u64>(),
        ) {
            for (i, s) in Stage::ALL.iter().enumerate() {
                values.push((i, 0.001 * (*s as usize + 1) as f64));
            }
            let timings: Vec<StageTiming> = values.iter().map(|&(s, d)| t(Stage::ALL[s], d)).collect();
            let mut shuffled = timings.clone();
            use rand::{seq::SliceRandom, SeedableRng};
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let a = summarize(&timings).unwrap();
            let b = summarize(&shuffled).unwrap();
            prop_assert_eq!(&a, &b);
            let total: f64 = a.stages.iter().map(|s| s.share).sum();
            prop_assert!((total - 100.0).abs() <= 0.01);
            for s in &a.stages {
                prop_assert!(s.min <= s.mean && s.mean <= s.max);
            }
        }
    }
}
