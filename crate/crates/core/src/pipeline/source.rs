use std::path::Path;

use crate::audio::{read_wav, resample, segment_on_silence, AudioClip, AudioError, AudioSegment, SegmenterConfig, CANONICAL_RATE};

/// Resample to the canonical rate and cut on silence.
pub fn segments_from_clip(clip: &AudioClip, config: &SegmenterConfig) -> Result<Vec<AudioSegment>, AudioError> {
    let clip = if clip.sample_rate() == CANONICAL_RATE {
        clip.clone()
    } else {
        resample(clip, CANONICAL_RATE)
    };
    segment_on_silence(&clip, config)
}

/// Segments from a single WAV file, or from every `.wav` in a directory in file-name order.
pub fn load_segments(path: impl AsRef<Path>, config: &SegmenterConfig) -> Result<Vec<AudioSegment>, AudioError> {
    let path = path.as_ref();
    let files = if path.is_dir() {
        let mut files: Vec<_> = std::fs::read_dir(path)
            .map_err(|source| AudioError::Io { path: path.display().to_string(), source })?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav")))
            .collect();
        files.sort();
        files
    } else {
        vec![path.to_path_buf()]
    };
    let mut out = Vec::new();
    for file in files {
        out.extend(segments_from_clip(&read_wav(&file)?, config)?);
    }
    Ok(out)
}
