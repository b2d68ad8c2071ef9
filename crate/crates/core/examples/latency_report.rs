//! Per-stage latency summaries: a fixed reference table and a live local measurement.
//!
//! cargo run --release --example latency_report

use std::sync::Arc;
use std::time::Duration;

use voxguard::audio::AudioSegment;
use voxguard::cnn::build_model;
use voxguard::features::MfccConfig;
use voxguard::llm::{LlmClassifier, PromptStrategy, ScriptedChat};
use voxguard::pipeline::{process_segment, CnnAudioModel, PipelineDeps, SessionMode};
use voxguard::stt::MockStt;
use voxguard::telemetry::{summarize, Stage, StageTiming};

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let reference: Vec<StageTiming> = Stage::ALL
        .iter()
        .zip([0.95, 0.48, 0.019, 0.055])
        .map(|(&s, d)| StageTiming::new(s, d, "reference"))
        .collect::<Result<_, _>>()?;
    println!("reference stage means:\n{}", summarize(&reference)?.to_table());

    // Network stages are simulated with fixed delays; the audio stages run for real.
    let deps = PipelineDeps::new(
        Arc::new(MockStt::new().with_transcript("bench", "hello").with_delay(Duration::from_millis(30))),
        LlmClassifier::new(Arc::new(ScriptedChat::always("No").with_delay(Duration::from_millis(15))), PromptStrategy::FewShot),
        Arc::new(CnnAudioModel::new(build_model(40, 0)?, MfccConfig::default())?),
    );
    let store = deps.telemetry.clone();
    for (i, secs) in [1.0, 2.5, 5.0, 10.0].into_iter().enumerate() {
        let n = (secs * 44_100.0) as usize;
        let seg = AudioSegment {
            samples: (0..n).map(|k| 0.2 * (k as f64 * 0.031).sin() * (k as f64 * 0.0007).cos()).collect(),
            sample_rate: 44_100,
            start_offset: 0.0,
            segment_index: i,
            source_id: "bench".into(),
        };
        let out = process_segment(seg, SessionMode::conversational(), &deps).await;
        println!("{secs:>5.1} s clip: decided in {:.3} s", out.wall_time);
    }
    println!("\nmeasured:\n{}", store.summarize()?.to_table());
    Ok(())
}
