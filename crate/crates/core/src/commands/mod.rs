//! The `voxguard` command line: argument parsing and the six workflows.
//!
//! [`run`] is the whole program minus process setup, so it can be driven in-process.
//! Exit codes: 0 success, 1 usage error, 2 runtime failure.

mod config;

pub use config::PipelineConfig;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use futures::StreamExt;

use crate::audio::{read_wav, AudioSegment};
use crate::cnn::{build_model, load_model, save_model, train, CnnModel};
use crate::eval::{collect_model_runs, compare_prompts, split, DatasetManifest, ModelKind};
use crate::features::{read_feature_csv, write_feature_csv, LabeledFeatures, MfccExtractor, N_MFCC};
use crate::llm::{chat_from_config, LlmClassifier, PromptStrategy};
use crate::pipeline::{load_segments, process_segment, run_session, segments_from_clip, CnnAudioModel, ModeKind, PipelineDeps, SessionMode};
use crate::stt::{stt_from_config, MockStt, SpeechToText, SttMode};
use crate::telemetry::TimingStore;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Runtime(_) => EXIT_FAILURE,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

type CliResult = Result<(), CliError>;

#[derive(Debug, Parser)]
#[command(name = "voxguard", version, about = "Voice hate-speech moderation: text and audio classifiers fused with AND")]
pub struct Cli {
    /// TOML pipeline configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a CSV of MFCC + RMS features, one row per speech segment.
    ExtractFeatures(ExtractArgs),
    /// Train the audio CNN on a feature CSV.
    Train(TrainArgs),
    /// Moderate a WAV file, a WAV directory or a manifest; events go to stdout as JSON lines.
    Moderate(ModerateArgs),
    /// Compare the text, audio and fused models on a labeled manifest.
    Evaluate(EvaluateArgs),
    /// Compare the three prompt strategies on a labeled manifest.
    ComparePrompts(ComparePromptsArgs),
    /// Time every pipeline stage over a manifest.
    BenchLatency(BenchArgs),
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
    /// Score each clip as one segment instead of cutting on silence.
    #[arg(long)]
    pub whole_clips: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
    /// Append RMS to the 40 MFCCs as a 41st input.
    #[arg(long)]
    pub include_rms: bool,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Per-epoch loss and accuracy as JSON lines.
    #[arg(long)]
    pub history: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ModelFlags {
    /// Trained CNN file.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, value_parser = parse_strategy)]
    pub strategy: Option<PromptStrategy>,
}

#[derive(Debug, Args)]
pub struct ModerateArgs {
    /// WAV file, directory of WAV files, or `.jsonl` manifest.
    pub input: PathBuf,
    #[command(flatten)]
    pub model: ModelFlags,
    #[arg(long, value_parser = parse_mode)]
    pub mode: Option<ModeKind>,
    #[arg(long)]
    pub speakers: Option<u32>,
    /// Segments in flight at once.
    #[arg(long)]
    pub depth: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[command(flatten)]
    pub model: ModelFlags,
    /// Which reports to print.
    #[arg(long, value_delimiter = ',', value_parser = parse_model_kind, default_value = "llm-only,audio-only,fused")]
    pub models: Vec<ModelKind>,
    /// Evaluate only the held-out part of a seeded split with this train fraction.
    #[arg(long)]
    pub split: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 4)]
    pub concurrency: usize,
    /// Also write the report as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ComparePromptsArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, value_delimiter = ',', value_parser = parse_strategy, default_value = "direct,definition,few-shot")]
    pub strategies: Vec<PromptStrategy>,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[command(flatten)]
    pub model: ModelFlags,
    #[arg(long, default_value_t = 1)]
    pub repetitions: usize,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

fn parse_strategy(s: &str) -> Result<PromptStrategy, String> {
    s.parse()
}

fn parse_mode(s: &str) -> Result<ModeKind, String> {
    match s {
        "conversational" => Ok(ModeKind::Conversational),
        "observational" => Ok(ModeKind::Observational),
        _ => Err(format!("unknown mode {s:?}; expected conversational or observational")),
    }
}

fn parse_model_kind(s: &str) -> Result<ModelKind, String> {
    ModelKind::ALL
        .into_iter()
        .find(|k| k.name() == s)
        .ok_or_else(|| format!("unknown model {s:?}; expected llm-only, audio-only or fused"))
}

/// Parse `args` (program name first) and run. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{text}");
                EXIT_OK
            } else {
                let _ = write!(err, "{text}");
                EXIT_USAGE
            };
        }
    };
    match execute(cli, out, err) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let config = match &cli.config {
        Some(path) => PipelineConfig::load(path).map_err(CliError::Usage)?,
        None => PipelineConfig::default(),
    };
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(runtime)?;
    match cli.command {
        Command::ExtractFeatures(a) => cmd_extract_features(&a, config, err),
        Command::Train(a) => cmd_train(&a, config, err),
        Command::Moderate(a) => rt.block_on(cmd_moderate(&a, config, out)),
        Command::Evaluate(a) => rt.block_on(cmd_evaluate(&a, config, out, err)),
        Command::ComparePrompts(a) => rt.block_on(cmd_compare_prompts(&a, config, out, err)),
        Command::BenchLatency(a) => rt.block_on(cmd_bench_latency(&a, config, out)),
    }
}

fn load_manifest(path: &Path) -> Result<DatasetManifest, CliError> {
    let m = DatasetManifest::load(path).map_err(runtime)?;
    if m.is_empty() {
        return Err(runtime(format!("{}: manifest has no entries", path.display())));
    }
    Ok(m)
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> CliResult {
    let text = serde_json::to_string_pretty(value).map_err(runtime)?;
    std::fs::write(path, text).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn is_manifest(path: &Path) -> bool {
    path.is_file()
        && path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("jsonl") || e.eq_ignore_ascii_case("json"))
}

fn cmd_extract_features(args: &ExtractArgs, config: PipelineConfig, err: &mut dyn Write) -> CliResult {
    config.validate().map_err(CliError::Usage)?;
    let manifest = load_manifest(&args.manifest)?;
    let extractor =
        MfccExtractor::new(config.mfcc.clone(), crate::audio::CANONICAL_RATE).map_err(runtime)?;
    let mut rows = Vec::new();
    for entry in manifest.entries() {
        let context = |e: &dyn std::fmt::Display| runtime(format!("entry {}: {e}", entry.id));
        let clip = read_wav(&entry.wav_path)
            .map_err(|e| context(&e))?
            .with_source_id(entry.id.clone());
        let segments = if args.whole_clips {
            let clip = crate::audio::resample(&clip, crate::audio::CANONICAL_RATE);
            vec![AudioSegment::whole(&clip)]
        } else {
            segments_from_clip(&clip, &config.segmenter).map_err(|e| context(&e))?
        };
        for segment in segments {
            match extractor.extract(&segment) {
                Ok(features) => rows.push(LabeledFeatures {
                    features,
                    label: Some(entry.label),
                }),
                Err(e) => {
                    let _ = writeln!(err, "skipping segment {}: {e}", segment.id());
                }
            }
        }
    }
    let file = std::fs::File::create(&args.out)
        .map_err(|e| runtime(format!("{}: {e}", args.out.display())))?;
    write_feature_csv(std::io::BufWriter::new(file), &rows).map_err(runtime)?;
    let _ = writeln!(err, "wrote {} feature rows from {} clips to {}", rows.len(), manifest.len(), args.out.display());
    Ok(())
}

fn cmd_train(args: &TrainArgs, config: PipelineConfig, err: &mut dyn Write) -> CliResult {
    let file = std::fs::File::open(&args.features)
        .map_err(|e| runtime(format!("{}: {e}", args.features.display())))?;
    let rows = read_feature_csv(std::io::BufReader::new(file), args.include_rms).map_err(runtime)?;
    let dataset = rows
        .into_iter()
        .map(|r| match r.label {
            Some(label) => Ok((r.features, label)),
            None => Err(runtime(format!("row {} has no label", r.features.segment_id))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut tc = config.train.clone();
    if let Some(v) = args.epochs {
        tc.epochs = v;
    }
    if let Some(v) = args.learning_rate {
        tc.learning_rate = v;
    }
    if let Some(v) = args.batch_size {
        tc.batch_size = v;
    }
    if let Some(v) = args.seed {
        tc.seed = v;
    }
    let dim = N_MFCC + usize::from(args.include_rms);
    let model = build_model(dim, tc.seed).map_err(runtime)?;
    let trained = train(model, &dataset, &tc).map_err(runtime)?;
    std::fs::write(&args.out, save_model(&trained.model))
        .map_err(|e| runtime(format!("{}: {e}", args.out.display())))?;
    if let Some(path) = &args.history {
        let mut text = String::new();
        for h in &trained.history {
            text.push_str(&serde_json::to_string(h).map_err(runtime)?);
            text.push('\n');
        }
        std::fs::write(path, text).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    }
    if let Some(last) = trained.history.last() {
        let _ = writeln!(
            err,
            "epoch {}: loss {:.4}, accuracy {:.4}; model written to {}",
            last.epoch,
            last.loss,
            last.accuracy,
            args.out.display()
        );
    }
    Ok(())
}

fn load_cnn(flags: &ModelFlags, config: &PipelineConfig) -> Result<CnnModel, CliError> {
    let path = flags
        .model
        .as_ref()
        .or(config.model_path.as_ref())
        .ok_or_else(|| CliError::Usage("a trained model is required (--model or model_path)".into()))?;
    let bytes = std::fs::read(path).map_err(|e| runtime(format!("model {}: {e}", path.display())))?;
    load_model(&bytes).map_err(|e| runtime(format!("model {}: {e}", path.display())))
}

/// Speech-to-text from config. A mock backend also learns every sidecar transcript in
/// `manifest`, keyed by entry id.
fn build_stt(config: &PipelineConfig, manifest: Option<&DatasetManifest>) -> Result<Arc<dyn SpeechToText>, CliError> {
    if config.stt.mode == SttMode::Network {
        return stt_from_config(&config.stt).map_err(runtime);
    }
    let mut mock = match &config.stt.mock_transcripts {
        Some(path) => MockStt::from_file(path).map_err(runtime)?,
        None => MockStt::new(),
    };
    for entry in manifest.map(|m| m.entries()).unwrap_or_default() {
        if let Some(text) = entry.sidecar_transcript() {
            mock.register(entry.id.clone(), text.map_err(runtime)?);
        }
    }
    Ok(Arc::new(mock))
}

fn build_deps(
    flags: &ModelFlags,
    config: &PipelineConfig,
    manifest: Option<&DatasetManifest>,
) -> Result<PipelineDeps, CliError> {
    let model = load_cnn(flags, config)?;
    let audio = CnnAudioModel::new(model, config.mfcc.clone()).map_err(runtime)?;
    let chat = chat_from_config(&config.llm).map_err(runtime)?;
    let strategy = flags.strategy.unwrap_or(config.strategy);
    Ok(PipelineDeps::new(
        build_stt(config, manifest)?,
        LlmClassifier::new(chat, strategy),
        Arc::new(audio),
    ))
}

async fn cmd_moderate(args: &ModerateArgs, mut config: PipelineConfig, out: &mut dyn Write) -> CliResult {
    if let Some(m) = args.mode {
        config.mode = m;
    }
    if let Some(s) = args.speakers {
        config.speakers = s;
    }
    if let Some(d) = args.depth {
        config.depth = d;
    }
    config.validate().map_err(CliError::Usage)?;
    let manifest = if is_manifest(&args.input) {
        Some(load_manifest(&args.input)?)
    } else {
        None
    };
    let deps = build_deps(&args.model, &config, manifest.as_ref())?;
    let segments = match &manifest {
        Some(m) => {
            let mut all = Vec::new();
            for entry in m.entries() {
                let clip = read_wav(&entry.wav_path)
                    .map_err(|e| runtime(format!("entry {}: {e}", entry.id)))?
                    .with_source_id(entry.id.clone());
                all.extend(segments_from_clip(&clip, &config.segmenter).map_err(runtime)?);
            }
            all
        }
        None => load_segments(&args.input, &config.segmenter).map_err(runtime)?,
    };
    let mut events = run_session(
        futures::stream::iter(segments),
        config.session_mode(),
        deps,
        config.depth,
    )
    .boxed();
    while let Some(event) = events.next().await {
        let line = serde_json::to_string(&event).map_err(runtime)?;
        writeln!(out, "{line}").map_err(runtime)?;
    }
    out.flush().map_err(runtime)
}

async fn cmd_evaluate(
    args: &EvaluateArgs,
    config: PipelineConfig,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CliResult {
    config.validate().map_err(CliError::Usage)?;
    let mut manifest = load_manifest(&args.manifest)?;
    if let Some(frac) = args.split {
        manifest = split(&manifest, frac, args.seed).map_err(|e| CliError::Usage(e.to_string()))?.1;
    }
    let deps = build_deps(&args.model, &config, Some(&manifest))?;
    let runs = collect_model_runs(&manifest, Some(deps.stt), &deps.llm, deps.audio, args.concurrency).await;
    for s in &runs.skipped {
        let _ = writeln!(err, "skipped {}: {}", s.id, s.reason);
    }
    if runs.manifest.is_empty() {
        return Err(runtime("every manifest entry was skipped"));
    }
    let report = runs.compare().map_err(runtime)?;
    for (kind, r) in &report.models {
        if args.models.contains(kind) {
            writeln!(out, "== {} ==\n{}", kind.name(), r.to_table()).map_err(runtime)?;
        }
    }
    writeln!(out, "{:<14}{:>10}", "Model", "FPR").map_err(runtime)?;
    for (kind, r) in &report.models {
        if args.models.contains(kind) {
            writeln!(out, "{:<14}{:>10.4}", kind.name(), r.fpr).map_err(runtime)?;
        }
    }
    if let Some(path) = &args.json {
        write_json(path, &report)?;
    }
    Ok(())
}

async fn cmd_compare_prompts(
    args: &ComparePromptsArgs,
    config: PipelineConfig,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CliResult {
    config.validate().map_err(CliError::Usage)?;
    let manifest = load_manifest(&args.manifest)?;
    let chat = chat_from_config(&config.llm).map_err(runtime)?;
    let stt = match (config.stt.mode, &config.stt.mock_transcripts) {
        (SttMode::Mock, None) => None,
        _ => Some(stt_from_config(&config.stt).map_err(runtime)?),
    };
    let cmp = compare_prompts(&args.strategies, &manifest, chat, stt).await;
    for row in &cmp.rows {
        for s in &row.skipped {
            let _ = writeln!(err, "{}: skipped {}: {}", row.strategy.name(), s.id, s.reason);
        }
    }
    write!(out, "{}", cmp.to_table()).map_err(runtime)?;
    if let Some(path) = &args.json {
        write_json(path, &cmp)?;
    }
    Ok(())
}

async fn cmd_bench_latency(args: &BenchArgs, config: PipelineConfig, out: &mut dyn Write) -> CliResult {
    config.validate().map_err(CliError::Usage)?;
    if args.repetitions == 0 {
        return Err(CliError::Usage("--repetitions must be at least 1".into()));
    }
    let manifest = load_manifest(&args.manifest)?;
    let store = Arc::new(TimingStore::new());
    let deps = build_deps(&args.model, &config, Some(&manifest))?.with_telemetry(Arc::clone(&store));
    let mut clips = Vec::with_capacity(manifest.len());
    for entry in manifest.entries() {
        let clip = read_wav(&entry.wav_path)
            .map_err(|e| runtime(format!("entry {}: {e}", entry.id)))?
            .with_source_id(entry.id.clone());
        clips.push(AudioSegment::whole(&crate::audio::resample(&clip, crate::audio::CANONICAL_RATE)));
    }
    let mode: SessionMode = config.session_mode();
    for _ in 0..args.repetitions {
        for clip in &clips {
            process_segment(clip.clone(), mode, &deps).await;
        }
    }
    let report = store.summarize().map_err(runtime)?;
    write!(out, "{}", report.to_table()).map_err(runtime)?;
    if let Some(path) = &args.json {
        write_json(path, &report)?;
    }
    Ok(())
}
