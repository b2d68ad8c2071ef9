use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::audio::SegmenterConfig;
use crate::cnn::TrainConfig;
use crate::features::MfccConfig;
use crate::llm::{LlmBackendConfig, PromptStrategy};
use crate::pipeline::{ModeKind, SessionMode, DEFAULT_DEPTH};
use crate::stt::SttBackendConfig;

/// Everything a run needs, loadable from TOML. Command-line flags override these values.
///
/// Bearer tokens are never stored here; the backend sections name the environment
/// variables that hold them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub segmenter: SegmenterConfig,
    pub mfcc: MfccConfig,
    pub model_path: Option<PathBuf>,
    pub stt: SttBackendConfig,
    pub llm: LlmBackendConfig,
    pub strategy: PromptStrategy,
    /// Component failures and unparseable replies become non-hate with a review flag.
    /// This is the only supported policy.
    pub fail_open: bool,
    pub depth: usize,
    pub mode: ModeKind,
    pub speakers: u32,
    pub train: TrainConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            segmenter: SegmenterConfig::default(),
            mfcc: MfccConfig::default(),
            model_path: None,
            stt: SttBackendConfig::default(),
            llm: LlmBackendConfig::default(),
            strategy: PromptStrategy::FewShot,
            fail_open: true,
            depth: DEFAULT_DEPTH,
            mode: ModeKind::Conversational,
            speakers: 1,
            train: TrainConfig::default(),
        }
    }
}

fn rebase(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

impl PipelineConfig {
    /// Parse a TOML file; relative paths inside it are taken relative to the file.
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut cfg: Self = toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        rebase(base, &mut cfg.model_path);
        rebase(base, &mut cfg.stt.mock_transcripts);
        rebase(base, &mut cfg.llm.script);
        Ok(cfg)
    }

    pub fn session_mode(&self) -> SessionMode {
        match self.mode {
            ModeKind::Conversational => SessionMode::conversational(),
            ModeKind::Observational => SessionMode::observational(self.speakers),
        }
    }

    /// Settings and referenced files are checked before any work starts.
    pub fn validate(&self) -> Result<(), String> {
        if !self.fail_open {
            return Err("fail_open = false is not supported".into());
        }
        if self.depth == 0 {
            return Err("depth must be at least 1".into());
        }
        self.segmenter.validate().map_err(|e| e.to_string())?;
        self.mfcc.validate().map_err(|e| e.to_string())?;
        self.stt.validate().map_err(|e| e.to_string())?;
        self.llm.validate().map_err(|e| e.to_string())?;
        for (what, path) in [
            ("model", &self.model_path),
            ("mock transcripts", &self.stt.mock_transcripts),
            ("chat script", &self.llm.script),
        ] {
            if let Some(p) = path {
                if !p.is_file() {
                    return Err(format!("{what} file {} does not exist", p.display()));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = PipelineConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        let back: PipelineConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn partial_file_and_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("m.vxcn"), b"x").unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "model_path = \"m.vxcn\"\ndepth = 2\nmode = \"observational\"\nspeakers = 5\n[segmenter]\nsilence_threshold_dbfs = -35.0\n").unwrap();
        let cfg = PipelineConfig::load(&path).unwrap();
        assert_eq!(cfg.model_path.as_deref(), Some(dir.path().join("m.vxcn").as_path()));
        assert_eq!(cfg.depth, 2);
        assert_eq!(cfg.session_mode(), SessionMode::observational(5));
        assert_eq!(cfg.segmenter.silence_threshold_dbfs, -35.0);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn inline_secrets_are_rejected() {
        assert!(toml::from_str::<PipelineConfig>("api_key = \"sk-123\"").is_err());
    }

    #[test]
    fn missing_referenced_file() {
        let cfg = PipelineConfig {
            model_path: Some("/definitely/not/here.vxcn".into()),
            ..Default::default()
        };
        assert!(cfg.validate().unwrap_err().contains("does not exist"));
    }
}
