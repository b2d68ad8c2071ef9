//! AND-rule late fusion and alert emission.
//!
//! A segment is hate only when the chat model says hate *and* the CNN probability is
//! strictly above 0.5. Unparseable replies and component failures fail open to non-hate
//! with `review_flag` set.

use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::clock::Clock;
use crate::cnn::Prediction;
use crate::llm::{LlmVerdict, VerdictLabel};
use crate::Label;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FusionError {
    #[error("verdicts refer to different segments: llm {llm:?}, audio {audio:?}")]
    SegmentMismatch { llm: String, audio: String },
    #[error("alert sink unavailable: {0}")]
    SinkUnavailable(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionDecision {
    pub segment_id: String,
    pub final_label: Label,
    /// `None` when the text path failed.
    pub llm_verdict: Option<LlmVerdict>,
    /// `None` when the audio path failed.
    pub audio_prediction: Option<Prediction>,
    pub review_flag: bool,
    /// Seconds on the injected clock.
    pub decided_at: f64,
}

/// The decision rule itself.
pub fn fused_label(llm: VerdictLabel, audio: Label) -> Label {
    if llm == VerdictLabel::Hate && audio == Label::Hate {
        Label::Hate
    } else {
        Label::NonHate
    }
}

pub fn fuse(
    llm: &LlmVerdict,
    audio: &Prediction,
    clock: &dyn Clock,
) -> Result<FusionDecision, FusionError> {
    let segment_id = match (&llm.segment_id, &audio.segment_id) {
        (Some(a), Some(b)) if a != b => {
            return Err(FusionError::SegmentMismatch {
                llm: a.clone(),
                audio: b.clone(),
            })
        }
        (Some(id), _) | (None, Some(id)) => id.clone(),
        (None, None) => String::new(),
    };
    Ok(FusionDecision {
        segment_id,
        final_label: fused_label(llm.label, audio.label),
        review_flag: llm.label == VerdictLabel::Unparseable,
        llm_verdict: Some(llm.clone()),
        audio_prediction: Some(audio.clone()),
        decided_at: clock.now().as_secs_f64(),
    })
}

/// Decision when at least one path produced nothing: always non-hate, always flagged.
pub fn fuse_fail_open(
    segment_id: impl Into<String>,
    llm: Option<LlmVerdict>,
    audio: Option<Prediction>,
    clock: &dyn Clock,
) -> FusionDecision {
    FusionDecision {
        segment_id: segment_id.into(),
        final_label: Label::NonHate,
        llm_verdict: llm,
        audio_prediction: audio,
        review_flag: true,
        decided_at: clock.now().as_secs_f64(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlertEvent {
    pub segment_id: String,
    pub message: String,
    pub emitted_at: f64,
}

pub trait AlertSink: Send + Sync {
    fn deliver(&self, event: &AlertEvent) -> Result<(), String>;
}

/// Collects alerts in delivery order.
#[derive(Debug, Default)]
pub struct MemorySink {
    events: Mutex<Vec<AlertEvent>>,
}

impl MemorySink {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn events(&self) -> Vec<AlertEvent> {
        self.events.lock().unwrap().clone()
    }
}

impl AlertSink for MemorySink {
    fn deliver(&self, event: &AlertEvent) -> Result<(), String> {
        self.events.lock().unwrap().push(event.clone());
        Ok(())
    }
}

/// Discards alerts.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullSink;

impl AlertSink for NullSink {
    fn deliver(&self, _: &AlertEvent) -> Result<(), String> {
        Ok(())
    }
}

pub fn alert_message(segment_id: &str) -> String {
    format!("Hate speech detected in segment {segment_id}")
}

/// Deliver one alert for a hate decision, none otherwise.
///
/// A failed delivery is retried once; if that fails too the alert is logged and
/// [`FusionError::SinkUnavailable`] is returned.
pub fn emit_alert(
    decision: &FusionDecision,
    sink: &dyn AlertSink,
    clock: &dyn Clock,
) -> Result<Option<AlertEvent>, FusionError> {
    if decision.final_label != Label::Hate {
        return Ok(None);
    }
    let event = AlertEvent {
        segment_id: decision.segment_id.clone(),
        message: alert_message(&decision.segment_id),
        emitted_at: clock.now().as_secs_f64(),
    };
    if sink.deliver(&event).is_ok() {
        return Ok(Some(event));
    }
    match sink.deliver(&event) {
        Ok(()) => Ok(Some(event)),
        Err(reason) => {
            log::error!("alert for {} not delivered: {reason}", event.segment_id);
            Err(FusionError::SinkUnavailable(reason))
        }
    }
}
