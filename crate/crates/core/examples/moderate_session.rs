//! Run a moderation session over synthetic segments with mock backends and print the
//! event stream as JSON lines.
//!
//! cargo run --example moderate_session

use std::sync::Arc;

use futures::StreamExt;
use voxguard::audio::AudioSegment;
use voxguard::cnn::build_model;
use voxguard::features::MfccConfig;
use voxguard::fusion::MemorySink;
use voxguard::llm::{ChatScript, LlmClassifier, PromptStrategy, ScriptRule, ScriptedChat};
use voxguard::pipeline::{run_session, CnnAudioModel, PipelineDeps, SessionMode};
use voxguard::stt::MockStt;

fn utterance(index: usize, f0: f64) -> AudioSegment {
    let sr = 44_100;
    AudioSegment {
        samples: (0..sr * 3 / 4)
            .map(|i| 0.2 * (2.0 * std::f64::consts::PI * f0 * i as f64 / sr as f64).sin())
            .collect(),
        sample_rate: sr as u32,
        start_offset: index as f64,
        segment_index: index,
        source_id: "plaza".into(),
    }
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let segments: Vec<AudioSegment> = (0..4).map(|i| utterance(i, 140.0 + 30.0 * i as f64)).collect();
    let mut stt = MockStt::new();
    stt.register("plaza#0", "hey, want to join our team?")
        .register("plaza#1", "you people are vermin")
        .register("plaza#2", "")
        .register("plaza#3", "good game everyone");
    let chat = ScriptedChat::from_script(ChatScript {
        default: "No".into(),
        rules: vec![ScriptRule { contains: "vermin".into(), reply: "Yes".into() }],
    });

    // An untrained model with its output bias pushed up, so the audio path says hate.
    let mut model = build_model(40, 3)?;
    model.zero_output_layer();
    *model.params_mut().last_mut().unwrap() = 4.0;

    let sink = Arc::new(MemorySink::new());
    let deps = PipelineDeps::new(
        Arc::new(stt),
        LlmClassifier::new(Arc::new(chat), PromptStrategy::FewShot),
        Arc::new(CnnAudioModel::new(model, MfccConfig::default())?),
    )
    .with_sink(sink.clone());
    let store = deps.telemetry.clone();

    let mut events = run_session(futures::stream::iter(segments), SessionMode::observational(3), deps, 4).boxed();
    while let Some(event) = events.next().await {
        println!("{}", serde_json::to_string(&event)?);
    }
    eprintln!("{} alert(s) delivered", sink.events().len());
    eprint!("{}", store.summarize()?.to_table());
    Ok(())
}
