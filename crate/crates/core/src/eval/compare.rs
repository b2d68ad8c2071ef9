use std::fmt::Write as _;
use std::sync::Arc;

use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};

use super::{classification_report, confusion, metrics, ClassReport, ConfusionMatrix, DatasetManifest, EvalError, ManifestEntry};
use crate::audio::{read_wav, AudioSegment};
use crate::fusion::fused_label;
use crate::llm::{classify_text, ChatBackend, LlmClassifier, PromptStrategy, VerdictLabel};
use crate::pipeline::AudioModel;
use crate::stt::SpeechToText;
use crate::Label;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    LlmOnly,
    AudioOnly,
    Fused,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::LlmOnly, ModelKind::AudioOnly, ModelKind::Fused];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::LlmOnly => "llm-only",
            ModelKind::AudioOnly => "audio-only",
            ModelKind::Fused => "fused",
        }
    }
}

/// Predictions of one model, keyed by manifest id in manifest order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ModelRun {
    pub ids: Vec<String>,
    pub predictions: Vec<Label>,
}

impl ModelRun {
    pub fn push(&mut self, id: impl Into<String>, prediction: Label) {
        self.ids.push(id.into());
        self.predictions.push(prediction);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedEntry {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub models: Vec<(ModelKind, ClassReport)>,
    pub sample_count: u64,
}

impl ComparisonReport {
    pub fn report(&self, kind: ModelKind) -> &ClassReport {
        &self.models.iter().find(|(k, _)| *k == kind).expect("all three models present").1
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        for (kind, report) in &self.models {
            let _ = writeln!(out, "== {} ==", kind.name());
            out.push_str(&report.to_table());
            out.push('\n');
        }
        let _ = writeln!(out, "{:<14}{:>10}", "Model", "FPR");
        for (kind, report) in &self.models {
            let _ = writeln!(out, "{:<14}{:>10.4}", kind.name(), report.fpr);
        }
        out
    }
}

/// Class reports for the three models plus the AND-rule sanity check.
///
/// Every run must cover exactly the manifest's ids in order. A fused FPR or recall above
/// either component is reported as [`EvalError::DominanceViolation`].
pub fn compare_models(
    manifest: &DatasetManifest,
    llm: &ModelRun,
    audio: &ModelRun,
    fused: &ModelRun,
) -> Result<ComparisonReport, EvalError> {
    let ids = manifest.ids();
    let truths = manifest.truths();
    let mut models = Vec::with_capacity(3);
    let mut cms = Vec::with_capacity(3);
    for (kind, run) in ModelKind::ALL.into_iter().zip([llm, audio, fused]) {
        if run.ids.len() != ids.len() || run.ids.iter().zip(&ids).any(|(a, b)| a != b) {
            return Err(EvalError::ManifestMismatch {
                model: kind.name().to_string(),
            });
        }
        let cm = confusion(&run.predictions, &truths)?;
        cms.push(cm);
        models.push((kind, classification_report(&cm)?));
    }
    let [l, a, f] = [0, 1, 2].map(|i| metrics(&cms[i]));
    if f.fpr > l.fpr.min(a.fpr) {
        return Err(EvalError::DominanceViolation(format!(
            "fused FPR {} exceeds component minimum {}",
            f.fpr,
            l.fpr.min(a.fpr)
        )));
    }
    if f.recall > l.recall.min(a.recall) {
        return Err(EvalError::DominanceViolation(format!(
            "fused recall {} exceeds component minimum {}",
            f.recall,
            l.recall.min(a.recall)
        )));
    }
    Ok(ComparisonReport {
        models,
        sample_count: truths.len() as u64,
    })
}

/// Predictions from all three models over a manifest, plus the entries that could not
/// be evaluated.
#[derive(Debug, Clone, Default)]
pub struct ModelRuns {
    /// The evaluated subset of the input manifest.
    pub manifest: DatasetManifest,
    pub llm: ModelRun,
    pub audio: ModelRun,
    pub fused: ModelRun,
    pub skipped: Vec<SkippedEntry>,
}

impl ModelRuns {
    pub fn compare(&self) -> Result<ComparisonReport, EvalError> {
        compare_models(&self.manifest, &self.llm, &self.audio, &self.fused)
    }
}

fn load_segment(entry: &ManifestEntry) -> Result<AudioSegment, String> {
    let clip = read_wav(&entry.wav_path).map_err(|e| e.to_string())?;
    Ok(AudioSegment::whole(&clip.with_source_id(entry.id.clone())))
}

async fn transcript_for(
    entry: &ManifestEntry,
    stt: Option<&dyn SpeechToText>,
) -> Result<String, String> {
    if let Some(text) = entry.sidecar_transcript() {
        return text.map_err(|e| e.to_string());
    }
    let stt = stt.ok_or("no sidecar transcript and no speech-to-text backend configured")?;
    let segment = load_segment(entry)?;
    stt.transcribe(&segment)
        .await
        .map(|t| t.text)
        .map_err(|e| format!("transcription: {e}"))
}

fn verdict_to_label(v: VerdictLabel) -> Label {
    // Unparseable answers fail open.
    if v == VerdictLabel::Hate {
        Label::Hate
    } else {
        Label::NonHate
    }
}

async fn evaluate_entry(
    entry: &ManifestEntry,
    stt: Option<&dyn SpeechToText>,
    llm: &LlmClassifier,
    audio: Arc<dyn AudioModel>,
) -> Result<(VerdictLabel, Label), String> {
    let text = transcript_for(entry, stt).await?;
    let verdict = if text.trim().is_empty() {
        VerdictLabel::NonHate
    } else {
        llm.classify(&text)
            .await
            .map_err(|e| format!("llm analysis: {e}"))?
            .label
    };
    let segment = load_segment(entry)?;
    let prediction = tokio::task::spawn_blocking(move || {
        let features = audio.extract(&segment)?;
        audio.predict(&features)
    })
    .await
    .map_err(|e| e.to_string())??;
    Ok((verdict, prediction.label))
}

/// Run the text model, the audio model and their fusion over every manifest entry.
///
/// Clips are scored whole. Entries run with up to `concurrency` in flight; results keep
/// manifest order.
pub async fn collect_model_runs(
    manifest: &DatasetManifest,
    stt: Option<Arc<dyn SpeechToText>>,
    llm: &LlmClassifier,
    audio: Arc<dyn AudioModel>,
    concurrency: usize,
) -> ModelRuns {
    let results: Vec<_> = stream::iter(manifest.entries())
        .map(|entry| {
            let stt = stt.clone();
            let audio = Arc::clone(&audio);
            async move { (entry, evaluate_entry(entry, stt.as_deref(), llm, audio).await) }
        })
        .buffered(concurrency.max(1))
        .collect()
        .await;

    let mut runs = ModelRuns::default();
    let mut kept = Vec::new();
    for (entry, result) in results {
        match result {
            Ok((verdict, audio_label)) => {
                runs.llm.push(&entry.id, verdict_to_label(verdict));
                runs.audio.push(&entry.id, audio_label);
                runs.fused.push(&entry.id, fused_label(verdict, audio_label));
                kept.push(entry.clone());
            }
            Err(reason) => runs.skipped.push(SkippedEntry {
                id: entry.id.clone(),
                reason,
            }),
        }
    }
    runs.manifest = DatasetManifest::new(kept).expect("subset of a valid manifest");
    runs.manifest.provenance = manifest.provenance.clone();
    runs
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptRow {
    pub strategy: PromptStrategy,
    pub evaluated: usize,
    pub confusion: ConfusionMatrix,
    /// `None` when nothing was evaluated or the evaluated entries cover one class only.
    pub report: Option<ClassReport>,
    pub skipped: Vec<SkippedEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptComparison {
    pub rows: Vec<PromptRow>,
}

impl PromptComparison {
    pub fn row(&self, strategy: PromptStrategy) -> Option<&PromptRow> {
        self.rows.iter().find(|r| r.strategy == strategy)
    }

    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<12}{:<10}{:>11}{:>9}{:>9}{:>10}\n",
            "Prompt", "Class", "Precision", "Recall", "F1", "Accuracy"
        );
        for row in &self.rows {
            match &row.report {
                Some(r) => {
                    for (i, (name, m)) in [("Hate", &r.hate), ("Non-hate", &r.non_hate)].into_iter().enumerate() {
                        let strategy = if i == 0 { row.strategy.name() } else { "" };
                        let acc = if i == 0 { format!("{:.2}", r.accuracy) } else { String::new() };
                        let _ = writeln!(
                            out,
                            "{:<12}{:<10}{:>11.2}{:>9.2}{:>9.2}{:>10}",
                            strategy, name, m.precision, m.recall, m.f1, acc
                        );
                    }
                }
                None => {
                    let _ = writeln!(out, "{:<12}(no report: {} evaluated)", row.strategy.name(), row.evaluated);
                }
            }
            if !row.skipped.is_empty() {
                let _ = writeln!(out, "{:<12}skipped {} entr{}", "", row.skipped.len(), if row.skipped.len() == 1 { "y" } else { "ies" });
            }
        }
        out
    }
}

/// Classify every manifest transcript once per prompt strategy.
///
/// Transcripts come from sidecar files, or from `stt` when an entry has none. Entries
/// without a transcript, or whose chat call fails, are skipped with a reason.
pub async fn compare_prompts(
    strategies: &[PromptStrategy],
    manifest: &DatasetManifest,
    chat: Arc<dyn ChatBackend>,
    stt: Option<Arc<dyn SpeechToText>>,
) -> PromptComparison {
    let mut texts = Vec::with_capacity(manifest.len());
    for entry in manifest.entries() {
        texts.push(transcript_for(entry, stt.as_deref()).await);
    }
    let mut rows = Vec::with_capacity(strategies.len());
    for &strategy in strategies {
        let mut cm = ConfusionMatrix::default();
        let mut skipped = Vec::new();
        for (entry, text) in manifest.entries().iter().zip(&texts) {
            let outcome = match text {
                Err(reason) => Err(reason.clone()),
                Ok(t) if t.trim().is_empty() => Ok(VerdictLabel::NonHate),
                Ok(t) => classify_text(chat.as_ref(), strategy, t)
                    .await
                    .map(|v| v.label)
                    .map_err(|e| format!("llm analysis: {e}")),
            };
            match outcome {
                Ok(v) => cm.record(verdict_to_label(v), entry.label),
                Err(reason) => skipped.push(SkippedEntry {
                    id: entry.id.clone(),
                    reason,
                }),
            }
        }
        rows.push(PromptRow {
            strategy,
            evaluated: cm.total() as usize,
            report: classification_report(&cm).ok(),
            confusion: cm,
            skipped,
        });
    }
    PromptComparison { rows }
}
