//! Render the three prompts and classify transcripts with a scripted chat backend.
//!
//! Set `VOXGUARD_CHAT_ENDPOINT` (and `OPENAI_API_KEY`) to use a real chat-completion
//! service instead.
//!
//! cargo run --example classify_transcript

use std::sync::Arc;

use voxguard::llm::{
    chat_from_config, render_prompt, ChatScript, LlmBackendConfig, LlmClassifier, LlmMode,
    PromptStrategy, ScriptRule, ScriptedChat, ChatBackend,
};

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("{}\n", render_prompt(PromptStrategy::FewShot, "Nice shot, well played!")?);

    let backend: Arc<dyn ChatBackend> = match std::env::var("VOXGUARD_CHAT_ENDPOINT") {
        Ok(endpoint) => chat_from_config(&LlmBackendConfig {
            mode: LlmMode::Network,
            endpoint,
            ..LlmBackendConfig::default()
        })?,
        Err(_) => Arc::new(ScriptedChat::from_script(ChatScript {
            default: "No".into(),
            rules: vec![ScriptRule { contains: "go back to".into(), reply: "Yes".into() }],
        })),
    };

    let texts = [
        "Nice shot, well played!",
        "People like you should go back to where you came from.",
        "",
    ];
    for strategy in PromptStrategy::ALL {
        let classifier = LlmClassifier::new(Arc::clone(&backend), strategy);
        for text in texts {
            match classifier.classify(text).await {
                Ok(v) => println!("{:<11} {:?} <- {text:?} (reply {:?})", strategy.name(), v.label, v.raw_response),
                Err(e) => println!("{:<11} error: {e}", strategy.name()),
            }
        }
    }
    Ok(())
}
