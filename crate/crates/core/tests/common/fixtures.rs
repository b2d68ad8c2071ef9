//! Synthetic audio and small on-disk corpora.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use voxguard::audio::{encode_wav, AudioSegment};
use voxguard::cnn::{build_model, save_model, CnnModel};

pub const SR: u32 = 44_100;

pub fn tone(freq: f64, secs: f64, amp: f64) -> Vec<f64> {
    let n = (secs * SR as f64) as usize;
    (0..n).map(|i| amp * (2.0 * PI * freq * i as f64 / SR as f64).sin()).collect()
}

pub fn noise(secs: f64, amp: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = (secs * SR as f64) as usize;
    (0..n).map(|_| amp * rng.gen_range(-1.0..1.0)).collect()
}

pub fn mix(parts: &[&[f64]]) -> Vec<f64> {
    let n = parts.iter().map(|p| p.len()).max().unwrap_or(0);
    (0..n)
        .map(|i| parts.iter().map(|p| p.get(i).copied().unwrap_or(0.0)).sum())
        .collect()
}

/// Harmonic stack with a slow amplitude envelope plus a little noise.
pub fn voiced(f0: f64, secs: f64, seed: u64) -> Vec<f64> {
    let n = (secs * SR as f64) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let t = i as f64 / SR as f64;
            let env = 0.6 + 0.4 * (2.0 * PI * 3.0 * t).sin();
            let h: f64 = (1..=6).map(|k| (2.0 * PI * f0 * k as f64 * t).sin() / k as f64).sum();
            0.12 * env * h + 0.01 * rng.gen_range(-1.0..1.0)
        })
        .collect()
}

pub fn segment(id: &str, index: usize, samples: Vec<f64>) -> AudioSegment {
    AudioSegment {
        samples,
        sample_rate: SR,
        start_offset: 0.0,
        segment_index: index,
        source_id: id.into(),
    }
}

/// A model that scores every input as hate (probability ~0.993).
pub fn always_hate_model() -> CnnModel {
    let mut m = build_model(40, 0).unwrap();
    m.zero_output_layer();
    *m.params_mut().last_mut().unwrap() = 5.0;
    m
}

pub struct Corpus {
    pub dir: PathBuf,
    pub manifest: PathBuf,
    pub model: PathBuf,
    pub script: PathBuf,
}

pub const HATE_TEXT: &str = "you people are vermin and should leave";
pub const BENIGN_TEXT: &str = "what a lovely evening in the lobby";

/// WAV clips (silence, voiced burst, silence), sidecar transcripts, a JSONL manifest,
/// an always-hate model and a chat script that answers Yes to the hate transcript.
pub fn write_corpus(dir: &Path, n_hate: usize, n_benign: usize) -> Corpus {
    let mut lines = String::new();
    for i in 0..n_hate + n_benign {
        let hate = i < n_hate;
        let id = format!("clip{i:02}");
        let gap = vec![0.0; SR as usize / 5];
        let burst = voiced(if hate { 140.0 } else { 220.0 }, 0.8, i as u64);
        let samples: Vec<f64> = gap.iter().chain(&burst).chain(&gap).copied().collect();
        std::fs::write(dir.join(format!("{id}.wav")), encode_wav(&samples, SR)).unwrap();
        std::fs::write(dir.join(format!("{id}.txt")), if hate { HATE_TEXT } else { BENIGN_TEXT }).unwrap();
        lines.push_str(&format!(
            "{{\"id\":\"{id}\",\"wav_path\":\"{id}.wav\",\"label\":\"{}\",\"transcript_path\":\"{id}.txt\"}}\n",
            if hate { "hate" } else { "non_hate" }
        ));
    }
    let manifest = dir.join("manifest.jsonl");
    std::fs::write(&manifest, lines).unwrap();
    let model = dir.join("always_hate.vxcn");
    std::fs::write(&model, save_model(&always_hate_model())).unwrap();
    let script = dir.join("chat_script.json");
    std::fs::write(
        &script,
        r#"{"default":"No","rules":[{"contains":"vermin","reply":"Yes"}]}"#,
    )
    .unwrap();
    Corpus {
        dir: dir.to_path_buf(),
        manifest,
        model,
        script,
    }
}

/// Config file pointing at the corpus model and chat script; both backends mocked.
pub fn write_config(corpus: &Corpus) -> PathBuf {
    let path = corpus.dir.join("run.toml");
    std::fs::write(
        &path,
        "model_path = \"always_hate.vxcn\"\nstrategy = \"few-shot\"\n\n[llm]\nmode = \"scripted-mock\"\nscript = \"chat_script.json\"\n",
    )
    .unwrap();
    path
}
