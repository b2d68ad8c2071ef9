//! WAV ingestion, resampling and silence-gated segmentation.

mod resample;
mod segment;
mod wav;

pub use resample::resample;
pub use segment::{frame_level_dbfs, segment_on_silence, SegmenterConfig};
pub use wav::{decode_wav, encode_wav, read_wav};

use serde::{Deserialize, Serialize};

/// Sample rate every pipeline stage expects.
pub const CANONICAL_RATE: u32 = 44_100;

#[derive(Debug, thiserror::Error)]
pub enum AudioError {
    #[error("malformed WAV container: {0}")]
    MalformedContainer(String),
    #[error("unsupported WAV encoding: {0}")]
    UnsupportedEncoding(String),
    #[error("invalid clip: {0}")]
    InvalidClip(String),
    #[error("invalid segmenter config: {0}")]
    InvalidConfig(String),
    #[error("i/o error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Mono PCM audio with amplitudes in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f64>,
    sample_rate: u32,
    source_id: String,
}

impl AudioClip {
    pub fn new(
        samples: Vec<f64>,
        sample_rate: u32,
        source_id: impl Into<String>,
    ) -> Result<Self, AudioError> {
        if sample_rate == 0 {
            return Err(AudioError::InvalidClip("sample rate must be positive".into()));
        }
        if let Some((i, x)) = samples
            .iter()
            .enumerate()
            .find(|(_, x)| !x.is_finite() || x.abs() > 1.0)
        {
            return Err(AudioError::InvalidClip(format!(
                "sample {i} = {x} outside [-1, 1]"
            )));
        }
        Ok(Self {
            samples,
            sample_rate,
            source_id: source_id.into(),
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn with_source_id(mut self, source_id: impl Into<String>) -> Self {
        self.source_id = source_id.into();
        self
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }
}

/// A contiguous run of speech cut from a clip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AudioSegment {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
    /// Seconds from the start of the source clip.
    pub start_offset: f64,
    pub segment_index: usize,
    pub source_id: String,
}

impl AudioSegment {
    /// The entire clip as a single segment.
    pub fn whole(clip: &AudioClip) -> Self {
        Self {
            samples: clip.samples.clone(),
            sample_rate: clip.sample_rate,
            start_offset: 0.0,
            segment_index: 0,
            source_id: clip.source_id.clone(),
        }
    }

    /// Stable identifier `<source>#<index>`.
    pub fn id(&self) -> String {
        format!("{}#{}", self.source_id, self.segment_index)
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn end_offset(&self) -> f64 {
        self.start_offset + self.duration_s()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// SHA-256 (hex) over the sample rate and the little-endian `f64` samples.
    pub fn content_hash(&self) -> String {
        content_hash(&self.samples, self.sample_rate)
    }

    pub fn to_clip(&self) -> Result<AudioClip, AudioError> {
        AudioClip::new(self.samples.clone(), self.sample_rate, self.source_id.clone())
    }
}

/// Content key used by the mock transcription backend.
pub fn content_hash(samples: &[f64], sample_rate: u32) -> String {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    h.update(sample_rate.to_le_bytes());
    for s in samples {
        h.update(s.to_le_bytes());
    }
    hex::encode(h.finalize())
}
