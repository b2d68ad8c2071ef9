//! AND-rule fusion of text and audio verdicts, with alerts for hate decisions.
//!
//! cargo run --example fusion_alerts

use voxguard::clock::SystemClock;
use voxguard::cnn::Prediction;
use voxguard::fusion::{emit_alert, fuse, MemorySink};
use voxguard::llm::{LlmVerdict, VerdictLabel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let clock = SystemClock::new();
    let sink = MemorySink::new();
    let cases = [
        ("lobby#0", VerdictLabel::Hate, 0.91),
        ("lobby#1", VerdictLabel::Hate, 0.32),
        ("lobby#2", VerdictLabel::NonHate, 0.97),
        ("lobby#3", VerdictLabel::Unparseable, 0.88),
    ];
    for (id, verdict, p) in cases {
        let decision = fuse(
            &LlmVerdict::new(verdict).for_segment(id),
            &Prediction::from_probability(p).for_segment(id),
            &clock,
        )?;
        println!(
            "{id}: text {verdict:?}, audio {p:.2} -> {:?}{}",
            decision.final_label,
            if decision.review_flag { " (review)" } else { "" }
        );
        emit_alert(&decision, &sink, &clock)?;
    }
    for alert in sink.events() {
        println!("alert: {}", alert.message);
    }
    Ok(())
}
