//! Speech-to-text backends.
//!
//! [`HttpStt`] uploads a segment as a WAV file to a transcription endpoint (multipart form
//! with `file` and `model` parts, JSON reply with a `text` field). [`MockStt`] answers from
//! registered transcripts keyed by segment content hash or source id and never touches
//! the network.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;

use crate::audio::{encode_wav, AudioSegment};
use crate::http::{self, AttemptError, RetryFailure, RetryPolicy};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SttError {
    #[error("segment has no audio")]
    EmptyAudio,
    #[error("transcription timed out after {attempts} attempt(s)")]
    Timeout { attempts: u32 },
    #[error("transcription backend error (status {status:?}): {body}")]
    BackendError { status: Option<u16>, body: String },
    #[error("transcription backend misconfigured: {0}")]
    Config(String),
}

impl From<RetryFailure> for SttError {
    fn from(f: RetryFailure) -> Self {
        match f {
            RetryFailure::Timeout { attempts } => SttError::Timeout { attempts },
            RetryFailure::Backend { status, body } => SttError::BackendError { status, body },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub text: String,
    pub segment_id: String,
    /// Seconds spent in the backend call, retries included.
    pub backend_latency: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SttMode {
    Network,
    Mock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SttBackendConfig {
    pub mode: SttMode,
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    pub auth_env: Option<String>,
    pub timeout_s: f64,
    pub max_retries: u32,
    pub max_in_flight: usize,
    /// Mock mode: JSON object mapping content hash or source id to transcript text.
    pub mock_transcripts: Option<PathBuf>,
}

impl Default for SttBackendConfig {
    fn default() -> Self {
        Self {
            mode: SttMode::Mock,
            endpoint: "https://api.openai.com/v1/audio/transcriptions".into(),
            model: "whisper-1".into(),
            auth_env: Some("OPENAI_API_KEY".into()),
            timeout_s: 10.0,
            max_retries: 2,
            max_in_flight: 8,
            mock_transcripts: None,
        }
    }
}

impl SttBackendConfig {
    pub fn validate(&self) -> Result<(), SttError> {
        if !(self.timeout_s > 0.0) {
            return Err(SttError::Config("timeout_s must be positive".into()));
        }
        if self.max_in_flight == 0 {
            return Err(SttError::Config("max_in_flight must be at least 1".into()));
        }
        Ok(())
    }
}

#[async_trait]
pub trait SpeechToText: Send + Sync {
    async fn transcribe(&self, segment: &AudioSegment) -> Result<Transcript, SttError>;
}

/// Build the backend described by `config`.
pub fn stt_from_config(config: &SttBackendConfig) -> Result<Arc<dyn SpeechToText>, SttError> {
    config.validate()?;
    Ok(match config.mode {
        SttMode::Network => Arc::new(HttpStt::new(config.clone())?),
        SttMode::Mock => Arc::new(match &config.mock_transcripts {
            Some(path) => MockStt::from_file(path)?,
            None => MockStt::new(),
        }),
    })
}

/// Transcribe with a backend built from `config`.
pub async fn transcribe(segment: &AudioSegment, config: &SttBackendConfig) -> Result<Transcript, SttError> {
    stt_from_config(config)?.transcribe(segment).await
}

#[derive(Debug, Deserialize)]
struct TranscriptionReply {
    text: String,
}

pub struct HttpStt {
    client: reqwest::Client,
    config: SttBackendConfig,
    token: Option<String>,
    permits: Semaphore,
}

impl HttpStt {
    pub fn new(config: SttBackendConfig) -> Result<Self, SttError> {
        config.validate()?;
        let token = http::bearer_token(config.auth_env.as_deref()).map_err(SttError::Config)?;
        Ok(Self {
            client: reqwest::Client::new(),
            permits: Semaphore::new(config.max_in_flight),
            token,
            config,
        })
    }

    async fn attempt(&self, wav: &[u8]) -> Result<String, AttemptError> {
        let part = reqwest::multipart::Part::bytes(wav.to_vec())
            .file_name("segment.wav")
            .mime_str("audio/wav")
            .map_err(|e| AttemptError::Transport(e.to_string()))?;
        let form = reqwest::multipart::Form::new()
            .part("file", part)
            .text("model", self.config.model.clone());
        let mut req = self.client.post(&self.config.endpoint).multipart(form);
        if let Some(token) = &self.token {
            req = req.bearer_auth(token);
        }
        let reply: TranscriptionReply = http::send(req)
            .await?
            .json()
            .await
            .map_err(|e| AttemptError::Decode(e.to_string()))?;
        Ok(reply.text)
    }
}

#[async_trait]
impl SpeechToText for HttpStt {
    async fn transcribe(&self, segment: &AudioSegment) -> Result<Transcript, SttError> {
        if segment.is_empty() {
            return Err(SttError::EmptyAudio);
        }
        let _permit = self.permits.acquire().await.expect("semaphore never closed");
        let wav = encode_wav(&segment.samples, segment.sample_rate);
        let policy = RetryPolicy::new(self.config.timeout_s, self.config.max_retries);
        let started = Instant::now();
        let text = http::with_retries(policy, || self.attempt(&wav)).await?;
        Ok(Transcript {
            text: text.trim().to_string(),
            segment_id: segment.id(),
            backend_latency: started.elapsed().as_secs_f64(),
        })
    }
}

/// Deterministic, network-free transcription.
#[derive(Debug, Default, Clone)]
pub struct MockStt {
    by_key: HashMap<String, String>,
    delay: Duration,
    failure: Option<SttError>,
}

impl MockStt {
    pub fn new() -> Self {
        Self::default()
    }

    /// Load a JSON object mapping content hashes, segment ids or source ids to text.
    pub fn from_file(path: impl AsRef<std::path::Path>) -> Result<Self, SttError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| SttError::Config(format!("{}: {e}", path.display())))?;
        let map: HashMap<String, String> = serde_json::from_str(&text)
            .map_err(|e| SttError::Config(format!("{}: {e}", path.display())))?;
        Ok(Self {
            by_key: map,
            ..Self::default()
        })
    }

    /// Register a transcript under a content hash or a source id.
    pub fn register(&mut self, key: impl Into<String>, text: impl Into<String>) -> &mut Self {
        self.by_key.insert(key.into(), text.into());
        self
    }

    pub fn with_transcript(mut self, key: impl Into<String>, text: impl Into<String>) -> Self {
        self.register(key, text);
        self
    }

    /// Sleep this long before answering.
    pub fn with_delay(mut self, delay: Duration) -> Self {
        self.delay = delay;
        self
    }

    /// Fail every call with `error`.
    pub fn failing(mut self, error: SttError) -> Self {
        self.failure = Some(error);
        self
    }

    fn lookup(&self, segment: &AudioSegment) -> Option<&String> {
        self.by_key
            .get(&segment.content_hash())
            .or_else(|| self.by_key.get(&segment.id()))
            .or_else(|| self.by_key.get(&segment.source_id))
    }
}

#[async_trait]
impl SpeechToText for MockStt {
    async fn transcribe(&self, segment: &AudioSegment) -> Result<Transcript, SttError> {
        if segment.is_empty() {
            return Err(SttError::EmptyAudio);
        }
        let started = Instant::now();
        if !self.delay.is_zero() {
            tokio::time::sleep(self.delay).await;
        }
        if let Some(err) = &self.failure {
            return Err(err.clone());
        }
        let text = self.lookup(segment).ok_or_else(|| SttError::BackendError {
            status: None,
            body: format!("no mock transcript registered for {}", segment.id()),
        })?;
        Ok(Transcript {
            text: text.clone(),
            segment_id: segment.id(),
            backend_latency: started.elapsed().as_secs_f64(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn segment(samples: Vec<f64>) -> AudioSegment {
        AudioSegment {
            samples,
            sample_rate: 16_000,
            start_offset: 0.0,
            segment_index: 0,
            source_id: "clip".into(),
        }
    }

    #[tokio::test]
    async fn mock_by_hash() {
        let seg = segment(vec![0.1, 0.2, 0.3]);
        let stt = MockStt::new().with_transcript(seg.content_hash(), "hello world");
        let t = stt.transcribe(&seg).await.unwrap();
        assert_eq!(t.text, "hello world");
        assert_eq!(t.segment_id, "clip#0");
        assert!(t.backend_latency >= 0.0);
    }

    #[tokio::test]
    async fn mock_by_source_id() {
        let stt = MockStt::new().with_transcript("clip", "sidecar text");
        let t = stt.transcribe(&segment(vec![0.5; 4])).await.unwrap();
        assert_eq!(t.text, "sidecar text");
    }

    #[tokio::test]
    async fn empty_audio() {
        let stt = MockStt::new().with_transcript("clip", "x");
        assert_eq!(stt.transcribe(&segment(vec![])).await, Err(SttError::EmptyAudio));
    }

    #[tokio::test]
    async fn unregistered_segment_is_backend_error() {
        let err = MockStt::new().transcribe(&segment(vec![0.1])).await.unwrap_err();
        assert!(matches!(err, SttError::BackendError { status: None, .. }));
    }

    #[tokio::test]
    async fn mock_file_from_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.json");
        std::fs::write(&path, r#"{"clip": "from file"}"#).unwrap();
        let cfg = SttBackendConfig {
            mock_transcripts: Some(path),
            ..SttBackendConfig::default()
        };
        let t = transcribe(&segment(vec![0.2; 8]), &cfg).await.unwrap();
        assert_eq!(t.text, "from file");
    }

    #[test]
    fn config_validation() {
        let cfg = SttBackendConfig {
            timeout_s: 0.0,
            ..SttBackendConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
