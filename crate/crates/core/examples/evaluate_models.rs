//! Confusion matrices, classification reports and the three-model comparison.
//!
//! cargo run --example evaluate_models

use voxguard::eval::{classification_report, compare_models, confusion, metrics, split, DatasetManifest, ManifestEntry, ModelRun};
use voxguard::Label;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let entries: Vec<ManifestEntry> = (0..40)
        .map(|i| ManifestEntry {
            id: format!("clip{i:02}"),
            wav_path: format!("clip{i:02}.wav").into(),
            label: if i % 5 < 2 { Label::Hate } else { Label::NonHate },
            transcript_path: None,
        })
        .collect();
    let manifest = DatasetManifest::new(entries)?;
    let (train, test) = split(&manifest, 0.8, 42)?;
    println!("split: {} train / {} test ({:.0}% hate overall)\n", train.len(), test.len(), 100.0 * manifest.hate_fraction());

    // Hand-made verdicts: the text model over-flags a little, the audio model more.
    let truths = manifest.truths();
    let llm: Vec<Label> = truths.iter().enumerate().map(|(i, &t)| if i % 9 == 0 { Label::Hate } else { t }).collect();
    let audio: Vec<Label> = truths.iter().enumerate().map(|(i, &t)| if i % 4 == 0 { Label::Hate } else if i % 7 == 0 { Label::NonHate } else { t }).collect();
    let fused: Vec<Label> = llm.iter().zip(&audio).map(|(a, b)| if a.is_hate() && b.is_hate() { Label::Hate } else { Label::NonHate }).collect();

    let cm = confusion(&llm, &truths)?;
    let m = metrics(&cm);
    println!("text model: {cm:?}\naccuracy {:.3} precision {:.3} recall {:.3} f1 {:.3} fpr {:.3}\n", m.accuracy, m.precision, m.recall, m.f1, m.fpr);
    print!("{}", classification_report(&cm)?.to_table());

    let ids: Vec<String> = manifest.ids().into_iter().map(String::from).collect();
    let run = |p: Vec<Label>| ModelRun { ids: ids.clone(), predictions: p };
    let report = compare_models(&manifest, &run(llm), &run(audio), &run(fused))?;
    println!("\n{}", report.to_table());
    Ok(())
}
