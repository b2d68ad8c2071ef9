use std::collections::HashSet;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::Label;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub wav_path: PathBuf,
    pub label: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript_path: Option<PathBuf>,
}

impl ManifestEntry {
    /// Ground-truth transcript from the sidecar file, if one is listed.
    pub fn sidecar_transcript(&self) -> Option<Result<String, EvalError>> {
        self.transcript_path.as_ref().map(|p| {
            std::fs::read_to_string(p)
                .map(|s| s.trim().to_string())
                .map_err(|source| EvalError::Io {
                    path: p.display().to_string(),
                    source,
                })
        })
    }
}

/// Line-delimited JSON: one `{id, wav_path, label, transcript_path?}` object per line.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DatasetManifest {
    entries: Vec<ManifestEntry>,
    pub provenance: Option<String>,
}

impl DatasetManifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Result<Self, EvalError> {
        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert(e.id.as_str()) {
                return Err(EvalError::DuplicateId(e.id.clone()));
            }
        }
        Ok(Self {
            entries,
            provenance: None,
        })
    }

    pub fn with_provenance(mut self, note: impl Into<String>) -> Self {
        self.provenance = Some(note.into());
        self
    }

    /// Relative paths are resolved against `base_dir`. Blank lines are ignored.
    pub fn parse(reader: impl BufRead, base_dir: &Path) -> Result<Self, EvalError> {
        let mut entries = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|source| EvalError::Io {
                path: base_dir.display().to_string(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let mut entry: ManifestEntry =
                serde_json::from_str(&line).map_err(|e| EvalError::Malformed {
                    line: i + 1,
                    message: e.to_string(),
                })?;
            entry.wav_path = base_dir.join(&entry.wav_path);
            entry.transcript_path = entry.transcript_path.map(|p| base_dir.join(p));
            entries.push(entry);
        }
        Self::new(entries)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EvalError> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|source| EvalError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Ok(Self::parse(std::io::BufReader::new(file), base)?
            .with_provenance(path.display().to_string()))
    }

    pub fn write_jsonl(&self, mut writer: impl Write) -> std::io::Result<()> {
        for e in &self.entries {
            serde_json::to_writer(&mut writer, e)?;
            writer.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.id.as_str()).collect()
    }

    pub fn truths(&self) -> Vec<Label> {
        self.entries.iter().map(|e| e.label).collect()
    }

    pub fn hate_fraction(&self) -> f64 {
        if self.entries.is_empty() {
            return 0.0;
        }
        let hate = self.entries.iter().filter(|e| e.label.is_hate()).count();
        hate as f64 / self.entries.len() as f64
    }
}

/// Seeded shuffle, then the first `floor(n * train_fraction)` entries train.
pub fn split(
    manifest: &DatasetManifest,
    train_fraction: f64,
    seed: u64,
) -> Result<(DatasetManifest, DatasetManifest), EvalError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(EvalError::InvalidFraction(train_fraction));
    }
    if manifest.is_empty() {
        return Err(EvalError::EmptyManifest);
    }
    let n = manifest.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    // Tolerance keeps e.g. 0.29 * 100 from flooring to 28.
    let n_train = ((n as f64 * train_fraction) + 1e-9).floor() as usize;
    let pick = |idx: &[usize]| DatasetManifest {
        entries: idx.iter().map(|&i| manifest.entries[i].clone()).collect(),
        provenance: manifest.provenance.clone(),
    };
    Ok((pick(&order[..n_train]), pick(&order[n_train..])))
}
