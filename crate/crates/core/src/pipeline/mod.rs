//! Per-segment orchestration: text and audio paths run concurrently, fuse, and alert.
//!
//! [`process_segment`] handles one segment. [`run_session`] drives a stream of segments
//! with bounded look-ahead and yields outcomes (and alerts) strictly in input order.

mod source;

pub use source::{load_segments, segments_from_clip};

use std::sync::Arc;
use std::time::Duration;

use futures::stream::{self, Stream, StreamExt};
use serde::{Deserialize, Serialize};

use crate::audio::{resample, AudioSegment};
use crate::clock::{Clock, SystemClock};
use crate::cnn::{forward, CnnModel, Prediction};
use crate::features::{FeatureVector, MfccConfig, MfccExtractor};
use crate::fusion::{emit_alert, fuse, fuse_fail_open, AlertEvent, AlertSink, FusionDecision, NullSink};
use crate::llm::{LlmClassifier, LlmVerdict, VerdictLabel};
use crate::stt::{SpeechToText, Transcript};
use crate::telemetry::{Stage, StageTiming, TimingStore};

pub const DEFAULT_DEPTH: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeKind {
    /// One user talking to an agent.
    Conversational,
    /// Passive monitoring of a multi-speaker space.
    Observational,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionMode {
    pub kind: ModeKind,
    pub speaker_count: u32,
}

impl SessionMode {
    pub fn conversational() -> Self {
        Self { kind: ModeKind::Conversational, speaker_count: 1 }
    }

    pub fn observational(speaker_count: u32) -> Self {
        Self { kind: ModeKind::Observational, speaker_count }
    }
}

impl Default for SessionMode {
    fn default() -> Self {
        Self::conversational()
    }
}

/// The audio path: feature extraction then scoring. Both run on a blocking thread.
pub trait AudioModel: Send + Sync {
    fn extract(&self, segment: &AudioSegment) -> Result<FeatureVector, String>;
    fn predict(&self, features: &FeatureVector) -> Result<Prediction, String>;
}

/// MFCC extractor plus a trained CNN.
pub struct CnnAudioModel {
    extractor: MfccExtractor,
    model: CnnModel,
}

impl CnnAudioModel {
    pub fn new(model: CnnModel, config: MfccConfig) -> Result<Self, crate::features::FeatureError> {
        let mut config = config;
        config.include_rms = model.input_dim() == crate::features::N_MFCC + 1;
        Ok(Self {
            extractor: MfccExtractor::new(config, crate::audio::CANONICAL_RATE)?,
            model,
        })
    }

    pub fn model(&self) -> &CnnModel {
        &self.model
    }
}

impl AudioModel for CnnAudioModel {
    fn extract(&self, segment: &AudioSegment) -> Result<FeatureVector, String> {
        if segment.sample_rate == self.extractor.sample_rate() {
            return self.extractor.extract(segment).map_err(|e| e.to_string());
        }
        let clip = segment.to_clip().map_err(|e| e.to_string())?;
        let clip = resample(&clip, self.extractor.sample_rate());
        let resampled = AudioSegment {
            samples: clip.into_samples(),
            sample_rate: self.extractor.sample_rate(),
            ..segment.clone()
        };
        self.extractor.extract(&resampled).map_err(|e| e.to_string())
    }

    fn predict(&self, features: &FeatureVector) -> Result<Prediction, String> {
        forward(&self.model, features).map_err(|e| e.to_string())
    }
}

/// Hook for the conversational agent that replies to the speaker. Only consulted in
/// conversational mode.
pub trait DialogueAgent: Send + Sync {
    fn on_outcome(&self, _outcome: &ModerationOutcome) {}
}

#[derive(Debug, Default, Clone, Copy)]
pub struct NoDialogue;

impl DialogueAgent for NoDialogue {}

/// Everything a session needs; all backends are injected.
#[derive(Clone)]
pub struct PipelineDeps {
    pub stt: Arc<dyn SpeechToText>,
    pub llm: LlmClassifier,
    pub audio: Arc<dyn AudioModel>,
    pub clock: Arc<dyn Clock>,
    pub telemetry: Arc<TimingStore>,
    pub sink: Arc<dyn AlertSink>,
    pub dialogue: Arc<dyn DialogueAgent>,
}

impl PipelineDeps {
    pub fn new(stt: Arc<dyn SpeechToText>, llm: LlmClassifier, audio: Arc<dyn AudioModel>) -> Self {
        Self {
            stt,
            llm,
            audio,
            clock: Arc::new(SystemClock::new()),
            telemetry: Arc::new(TimingStore::new()),
            sink: Arc::new(NullSink),
            dialogue: Arc::new(NoDialogue),
        }
    }

    pub fn with_clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    pub fn with_telemetry(mut self, store: Arc<TimingStore>) -> Self {
        self.telemetry = store;
        self
    }

    pub fn with_sink(mut self, sink: Arc<dyn AlertSink>) -> Self {
        self.sink = sink;
        self
    }

    pub fn with_dialogue(mut self, dialogue: Arc<dyn DialogueAgent>) -> Self {
        self.dialogue = dialogue;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeStatus {
    Complete,
    /// At least one path failed; the decision failed open.
    PartialFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModerationOutcome {
    pub segment_id: String,
    pub mode: SessionMode,
    pub status: OutcomeStatus,
    pub decision: FusionDecision,
    pub transcript: Option<Transcript>,
    pub stage_timings: Vec<StageTiming>,
    /// Seconds from segment arrival to decision.
    pub wall_time: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum SessionEvent {
    Outcome(ModerationOutcome),
    Alert(AlertEvent),
}

fn elapsed(clock: &dyn Clock, since: Duration) -> f64 {
    clock.now().saturating_sub(since).as_secs_f64()
}

fn timing(stage: Stage, seconds: f64, id: &str) -> StageTiming {
    StageTiming::new(stage, seconds, id).expect("clock durations are non-negative")
}

struct TextResult {
    transcript: Option<Transcript>,
    verdict: Result<LlmVerdict, String>,
    timings: Vec<StageTiming>,
}

async fn text_path(segment: &AudioSegment, id: &str, deps: &PipelineDeps) -> TextResult {
    let clock = deps.clock.as_ref();
    let mut timings = Vec::with_capacity(2);
    let start = clock.now();
    let transcript = deps.stt.transcribe(segment).await;
    timings.push(timing(Stage::Transcription, elapsed(clock, start), id));
    let transcript = match transcript {
        Ok(t) => t,
        Err(e) => {
            return TextResult {
                transcript: None,
                verdict: Err(format!("transcription: {e}")),
                timings,
            }
        }
    };
    if transcript.text.trim().is_empty() {
        // Nothing to classify; the chat backend is never called.
        timings.push(timing(Stage::LlmAnalysis, 0.0, id));
        return TextResult {
            transcript: Some(transcript),
            verdict: Ok(LlmVerdict::new(VerdictLabel::NonHate).for_segment(id)),
            timings,
        };
    }
    let start = clock.now();
    let verdict = deps.llm.classify(&transcript.text).await;
    timings.push(timing(Stage::LlmAnalysis, elapsed(clock, start), id));
    TextResult {
        transcript: Some(transcript),
        verdict: verdict
            .map(|v| v.for_segment(id))
            .map_err(|e| format!("llm analysis: {e}")),
        timings,
    }
}

async fn audio_path(
    segment: AudioSegment,
    id: String,
    deps: &PipelineDeps,
) -> (Result<Prediction, String>, Vec<StageTiming>) {
    let model = Arc::clone(&deps.audio);
    let clock = Arc::clone(&deps.clock);
    let joined = tokio::task::spawn_blocking(move || {
        let mut timings = Vec::with_capacity(2);
        let start = clock.now();
        let features = model.extract(&segment);
        timings.push(timing(Stage::AudioExtraction, elapsed(clock.as_ref(), start), &id));
        let features = match features {
            Ok(f) => f,
            Err(e) => return (Err(format!("audio extraction: {e}")), timings),
        };
        let start = clock.now();
        let prediction = model.predict(&features);
        timings.push(timing(Stage::AudioPrediction, elapsed(clock.as_ref(), start), &id));
        (
            prediction
                .map(|p| p.for_segment(id.as_str()))
                .map_err(|e| format!("audio prediction: {e}")),
            timings,
        )
    })
    .await;
    joined.unwrap_or_else(|e| (Err(format!("audio path panicked: {e}")), Vec::new()))
}

/// Run both classifiers on one segment and fuse the results.
///
/// Component failures never surface as errors: the outcome is marked
/// [`OutcomeStatus::PartialFailure`] and the decision fails open to non-hate.
pub async fn process_segment(
    segment: AudioSegment,
    mode: SessionMode,
    deps: &PipelineDeps,
) -> ModerationOutcome {
    let clock = deps.clock.as_ref();
    let arrived = clock.now();
    let id = segment.id();

    let (text, (audio, audio_timings)) = tokio::join!(
        text_path(&segment, &id, deps),
        audio_path(segment.clone(), id.clone(), deps),
    );

    let mut stage_timings = text.timings;
    stage_timings.extend(audio_timings);
    deps.telemetry.extend(stage_timings.iter().cloned());

    let mut errors = Vec::new();
    let decision = match (text.verdict, audio) {
        (Ok(v), Ok(p)) => match fuse(&v, &p, clock) {
            Ok(d) => d,
            Err(e) => {
                errors.push(e.to_string());
                fuse_fail_open(id.clone(), Some(v), Some(p), clock)
            }
        },
        (v, p) => {
            let v = v.map_err(|e| errors.push(e)).ok();
            let p = p.map_err(|e| errors.push(e)).ok();
            fuse_fail_open(id.clone(), v, p, clock)
        }
    };
    for e in &errors {
        log::warn!("segment {id}: {e}");
    }

    ModerationOutcome {
        segment_id: id,
        mode,
        status: if errors.is_empty() {
            OutcomeStatus::Complete
        } else {
            OutcomeStatus::PartialFailure
        },
        decision,
        transcript: text.transcript,
        stage_timings,
        wall_time: elapsed(clock, arrived),
        errors,
    }
}

/// Process a stream of segments with up to `depth` segments in flight.
///
/// Outcomes come out in input order regardless of which segment finishes first. Each
/// hate decision is followed by its alert, delivered through the session's single sink.
pub fn run_session<S>(
    segments: S,
    mode: SessionMode,
    deps: PipelineDeps,
    depth: usize,
) -> impl Stream<Item = SessionEvent> + Send
where
    S: Stream<Item = AudioSegment> + Send + 'static,
{
    let deps = Arc::new(deps);
    let worker = Arc::clone(&deps);
    segments
        .map(move |segment| {
            let deps = Arc::clone(&worker);
            async move { process_segment(segment, mode, &deps).await }
        })
        .buffered(depth.max(1))
        .flat_map(move |outcome| {
            if mode.kind == ModeKind::Conversational {
                deps.dialogue.on_outcome(&outcome);
            }
            let alert = match emit_alert(&outcome.decision, deps.sink.as_ref(), deps.clock.as_ref()) {
                Ok(alert) => alert,
                Err(e) => {
                    log::error!("{e}");
                    None
                }
            };
            let mut events = vec![SessionEvent::Outcome(outcome)];
            events.extend(alert.map(SessionEvent::Alert));
            stream::iter(events)
        })
}

/// Convenience wrapper: run a finite list and collect every event.
pub async fn run_to_end(
    segments: Vec<AudioSegment>,
    mode: SessionMode,
    deps: PipelineDeps,
    depth: usize,
) -> Vec<SessionEvent> {
    run_session(stream::iter(segments), mode, deps, depth).collect().await
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnn::build_model;
    use crate::fusion::MemorySink;
    use crate::llm::{LlmError, PromptStrategy, ScriptedChat};
    use crate::stt::{MockStt, SttError};
    use crate::Label;

    struct FixedAudio(f64);

    impl AudioModel for FixedAudio {
        fn extract(&self, s: &AudioSegment) -> Result<FeatureVector, String> {
            FeatureVector::new(s.id(), vec![0.0; 40], 0.1, false).map_err(|e| e.to_string())
        }
        fn predict(&self, _: &FeatureVector) -> Result<Prediction, String> {
            Ok(Prediction::from_probability(self.0))
        }
    }

    fn seg(source: &str, index: usize) -> AudioSegment {
        AudioSegment {
            samples: (0..4410).map(|i| 0.3 * (i as f64 * 0.07).sin()).collect(),
            sample_rate: 44_100,
            start_offset: index as f64,
            segment_index: index,
            source_id: source.into(),
        }
    }

    fn deps(stt: MockStt, chat: ScriptedChat, p: f64) -> PipelineDeps {
        PipelineDeps::new(
            Arc::new(stt),
            LlmClassifier::new(Arc::new(chat), PromptStrategy::FewShot),
            Arc::new(FixedAudio(p)),
        )
    }

    #[tokio::test]
    async fn hate_on_both_paths() {
        let d = deps(MockStt::new().with_transcript("a", "you people are vermin"), ScriptedChat::always("Yes"), 0.9);
        let out = process_segment(seg("a", 0), SessionMode::conversational(), &d).await;
        assert_eq!(out.status, OutcomeStatus::Complete);
        assert_eq!(out.decision.final_label, Label::Hate);
        assert_eq!(out.stage_timings.len(), 4);
        assert_eq!(d.telemetry.len(), 4);
    }

    #[tokio::test]
    async fn empty_transcript_skips_llm() {
        let chat = Arc::new(ScriptedChat::always("Yes"));
        let d = PipelineDeps::new(
            Arc::new(MockStt::new().with_transcript("a", "  ")),
            LlmClassifier::new(chat.clone(), PromptStrategy::Direct),
            Arc::new(FixedAudio(0.9)),
        );
        let out = process_segment(seg("a", 0), SessionMode::conversational(), &d).await;
        assert_eq!(out.decision.final_label, Label::NonHate);
        assert!(chat.prompts().is_empty());
        let llm = out.stage_timings.iter().find(|t| t.stage == Stage::LlmAnalysis).unwrap();
        assert_eq!(llm.duration(), 0.0);
    }

    #[tokio::test]
    async fn stt_failure_fails_open() {
        let stt = MockStt::new().failing(SttError::Timeout { attempts: 3 });
        let d = deps(stt, ScriptedChat::always("Yes"), 0.99);
        let out = process_segment(seg("a", 0), SessionMode::conversational(), &d).await;
        assert_eq!(out.status, OutcomeStatus::PartialFailure);
        assert_eq!(out.decision.final_label, Label::NonHate);
        assert!(out.decision.review_flag);
        assert!(out.decision.audio_prediction.is_some());
        assert!(out.decision.llm_verdict.is_none());
    }

    #[tokio::test]
    async fn llm_failure_fails_open() {
        let chat = ScriptedChat::always("Yes").failing(LlmError::Timeout { attempts: 2 });
        let d = deps(MockStt::new().with_transcript("a", "hello"), chat, 0.99);
        let out = process_segment(seg("a", 0), SessionMode::observational(3), &d).await;
        assert_eq!(out.status, OutcomeStatus::PartialFailure);
        assert_eq!(out.decision.final_label, Label::NonHate);
        assert_eq!(out.mode.kind, ModeKind::Observational);
    }

    #[tokio::test]
    async fn real_cnn_model_runs() {
        let model = build_model(40, 1).unwrap();
        let audio = CnnAudioModel::new(model, MfccConfig::default()).unwrap();
        let d = PipelineDeps::new(
            Arc::new(MockStt::new().with_transcript("a", "hello")),
            LlmClassifier::new(Arc::new(ScriptedChat::always("No")), PromptStrategy::Direct),
            Arc::new(audio),
        );
        let out = process_segment(seg("a", 0), SessionMode::conversational(), &d).await;
        assert_eq!(out.status, OutcomeStatus::Complete, "{:?}", out.errors);
        let p = out.decision.audio_prediction.unwrap().probability;
        assert!((0.0..=1.0).contains(&p));
    }

    #[tokio::test]
    async fn session_orders_outcomes_and_alerts() {
        let sink = Arc::new(MemorySink::new());
        let stt = MockStt::new()
            .with_transcript("a", "fine")
            .with_transcript("b", "hateful words");
        let chat = ScriptedChat::from_script(crate::llm::ChatScript {
            default: "No".into(),
            rules: vec![crate::llm::ScriptRule { contains: "hateful".into(), reply: "Yes".into() }],
        });
        let d = deps(stt, chat, 0.8).with_sink(sink.clone());
        let events = run_to_end(vec![seg("a", 0), seg("b", 1), seg("a", 2)], SessionMode::default(), d, 4).await;
        let kinds: Vec<String> = events
            .iter()
            .map(|e| match e {
                SessionEvent::Outcome(o) => o.segment_id.clone(),
                SessionEvent::Alert(a) => format!("alert:{}", a.segment_id),
            })
            .collect();
        assert_eq!(kinds, ["a#0", "b#1", "alert:b#1", "a#2"]);
        assert_eq!(sink.events().len(), 1);
    }
}
