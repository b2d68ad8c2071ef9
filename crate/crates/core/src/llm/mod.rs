//! Transcript classification through a chat-completion backend.

mod backend;
mod prompt;

pub use backend::{chat_from_config, ChatBackend, HttpChat, ScriptRule, ScriptedChat, ChatScript};
pub use prompt::{render_prompt, PromptStrategy};

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::http::RetryFailure;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LlmError {
    #[error("transcript is empty")]
    EmptyText,
    #[error("chat backend timed out after {attempts} attempt(s)")]
    Timeout { attempts: u32 },
    #[error("chat backend error (status {status:?}): {body}")]
    BackendError { status: Option<u16>, body: String },
    #[error("chat backend misconfigured: {0}")]
    Config(String),
}

impl From<RetryFailure> for LlmError {
    fn from(f: RetryFailure) -> Self {
        match f {
            RetryFailure::Timeout { attempts } => LlmError::Timeout { attempts },
            RetryFailure::Backend { status, body } => LlmError::BackendError { status, body },
        }
    }
}

/// Parsed model answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictLabel {
    Hate,
    NonHate,
    Unparseable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmVerdict {
    pub label: VerdictLabel,
    pub raw_response: String,
    pub backend_latency: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segment_id: Option<String>,
}

impl LlmVerdict {
    pub fn new(label: VerdictLabel) -> Self {
        Self {
            label,
            raw_response: String::new(),
            backend_latency: 0.0,
            segment_id: None,
        }
    }

    pub fn for_segment(mut self, id: impl Into<String>) -> Self {
        self.segment_id = Some(id.into());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LlmMode {
    Network,
    ScriptedMock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmBackendConfig {
    pub mode: LlmMode,
    pub endpoint: String,
    pub model: String,
    pub auth_env: Option<String>,
    pub temperature: f64,
    pub timeout_s: f64,
    pub max_retries: u32,
    pub max_in_flight: usize,
    /// Scripted mode: JSON [`ChatScript`] file. Without it every reply is "No".
    pub script: Option<PathBuf>,
}

impl Default for LlmBackendConfig {
    fn default() -> Self {
        Self {
            mode: LlmMode::ScriptedMock,
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-3.5-turbo".into(),
            auth_env: Some("OPENAI_API_KEY".into()),
            temperature: 0.0,
            timeout_s: 10.0,
            max_retries: 2,
            max_in_flight: 8,
            script: None,
        }
    }
}

impl LlmBackendConfig {
    pub fn validate(&self) -> Result<(), LlmError> {
        if !(self.timeout_s > 0.0) {
            return Err(LlmError::Config("timeout_s must be positive".into()));
        }
        if self.max_in_flight == 0 {
            return Err(LlmError::Config("max_in_flight must be at least 1".into()));
        }
        Ok(())
    }
}

/// Map a free-form reply onto a label by its first word.
///
/// Leading/trailing whitespace and punctuation around the first token are ignored and
/// matching is case-insensitive: `yes` is hate, `no` is non-hate, anything else is
/// unparseable.
pub fn parse_verdict(raw: &str) -> VerdictLabel {
    let first = raw.split_whitespace().next().unwrap_or("");
    let token = first
        .trim_matches(|c: char| !c.is_alphanumeric())
        .to_lowercase();
    match token.as_str() {
        "yes" => VerdictLabel::Hate,
        "no" => VerdictLabel::NonHate,
        _ => VerdictLabel::Unparseable,
    }
}

/// One prompt, one request, one parsed verdict.
pub async fn classify_text(
    backend: &dyn ChatBackend,
    strategy: PromptStrategy,
    text: &str,
) -> Result<LlmVerdict, LlmError> {
    let prompt = render_prompt(strategy, text)?;
    let started = Instant::now();
    let reply = backend.complete(&prompt).await?;
    Ok(LlmVerdict {
        label: parse_verdict(&reply),
        raw_response: reply,
        backend_latency: started.elapsed().as_secs_f64(),
        segment_id: None,
    })
}

/// A backend bound to a prompt strategy.
#[derive(Clone)]
pub struct LlmClassifier {
    backend: Arc<dyn ChatBackend>,
    strategy: PromptStrategy,
}

impl LlmClassifier {
    pub fn new(backend: Arc<dyn ChatBackend>, strategy: PromptStrategy) -> Self {
        Self { backend, strategy }
    }

    pub fn strategy(&self) -> PromptStrategy {
        self.strategy
    }

    pub fn with_strategy(&self, strategy: PromptStrategy) -> Self {
        Self {
            backend: Arc::clone(&self.backend),
            strategy,
        }
    }

    pub async fn classify(&self, text: &str) -> Result<LlmVerdict, LlmError> {
        classify_text(self.backend.as_ref(), self.strategy, text).await
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_examples() {
        assert_eq!(parse_verdict("Yes"), VerdictLabel::Hate);
        assert_eq!(parse_verdict("  no.\n"), VerdictLabel::NonHate);
        assert_eq!(parse_verdict("No."), VerdictLabel::NonHate);
        assert_eq!(parse_verdict("YES, it is"), VerdictLabel::Hate);
        assert_eq!(parse_verdict("I cannot determine that."), VerdictLabel::Unparseable);
        assert_eq!(parse_verdict(""), VerdictLabel::Unparseable);
        assert_eq!(parse_verdict("Yesterday"), VerdictLabel::Unparseable);
        assert_eq!(parse_verdict("\"No\""), VerdictLabel::NonHate);
    }

    proptest! {
        #[test]
        fn parse_is_total(s in ".*") {
            let _ = parse_verdict(&s);
        }
    }

    #[tokio::test]
    async fn scripted_yes_and_no() {
        let yes = ScriptedChat::always("Yes");
        let v = classify_text(&yes, PromptStrategy::Direct, "some text").await.unwrap();
        assert_eq!(v.label, VerdictLabel::Hate);
        assert_eq!(v.raw_response, "Yes");
        let no = ScriptedChat::always("No.");
        let v = classify_text(&no, PromptStrategy::FewShot, "some text").await.unwrap();
        assert_eq!(v.label, VerdictLabel::NonHate);
    }

    #[tokio::test]
    async fn scripted_timeout_surfaces() {
        let chat = ScriptedChat::always("Yes").failing(LlmError::Timeout { attempts: 3 });
        let err = classify_text(&chat, PromptStrategy::Direct, "x").await.unwrap_err();
        assert_eq!(err, LlmError::Timeout { attempts: 3 });
    }

    #[tokio::test]
    async fn empty_text_never_reaches_backend() {
        let chat = ScriptedChat::always("Yes");
        assert_eq!(
            classify_text(&chat, PromptStrategy::Direct, "   ").await,
            Err(LlmError::EmptyText)
        );
        assert!(chat.prompts().is_empty());
    }

    #[tokio::test]
    async fn deterministic_with_script() {
        let chat = ScriptedChat::from_script(ChatScript {
            default: "No".into(),
            rules: vec![ScriptRule {
                contains: "criminals".into(),
                reply: "Yes".into(),
            }],
        });
        let clf = LlmClassifier::new(Arc::new(chat), PromptStrategy::Definition);
        for _ in 0..3 {
            assert_eq!(clf.classify("you are all criminals").await.unwrap().label, VerdictLabel::Hate);
            assert_eq!(clf.classify("nice weather").await.unwrap().label, VerdictLabel::NonHate);
        }
    }
}
