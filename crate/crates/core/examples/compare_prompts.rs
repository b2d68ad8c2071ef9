//! Compare the three prompt strategies on a small manifest with sidecar transcripts.
//!
//! cargo run --example compare_prompts

use std::sync::Arc;

use voxguard::eval::{compare_prompts, DatasetManifest, ManifestEntry};
use voxguard::llm::{PromptStrategy, ScriptedChat};
use voxguard::Label;

const LINES: [(&str, Label); 6] = [
    ("those immigrants are all criminals", Label::Hate),
    ("people like her should not be allowed here", Label::Hate),
    ("nice build, where did you get that hat", Label::NonHate),
    ("i will destroy you next round", Label::NonHate),
    ("go back to your own country", Label::Hate),
    ("thanks for the help earlier", Label::NonHate),
];

/// A stand-in for a live model: the definition and few-shot prompts make it less eager
/// to call gaming trash talk hate.
fn replies(strategy: PromptStrategy) -> ScriptedChat {
    let mut chat = ScriptedChat::always("No");
    for (text, label) in LINES {
        let yes = label.is_hate() || (strategy == PromptStrategy::Direct && text.contains("destroy"));
        chat = chat.then(Ok(if yes { "Yes" } else { "No" }.to_string()));
    }
    chat
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let mut entries = Vec::new();
    for (i, (text, label)) in LINES.iter().enumerate() {
        let t = dir.path().join(format!("{i}.txt"));
        std::fs::write(&t, text)?;
        entries.push(ManifestEntry {
            id: format!("line{i}"),
            wav_path: dir.path().join(format!("{i}.wav")),
            label: *label,
            transcript_path: Some(t),
        });
    }
    let manifest = DatasetManifest::new(entries)?;
    let mut rows = Vec::new();
    for strategy in PromptStrategy::ALL {
        let cmp = compare_prompts(&[strategy], &manifest, Arc::new(replies(strategy)), None).await;
        rows.extend(cmp.rows);
    }
    print!("{}", voxguard::eval::PromptComparison { rows }.to_table());
    Ok(())
}
