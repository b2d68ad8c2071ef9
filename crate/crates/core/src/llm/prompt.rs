use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::LlmError;

const DIRECT: &str = "You are a classifier that identifies whether a given text contains hate \
speech or not. Is the following text hate speech? Respond with Yes or No. Here is the text: ";

const DEFINITION: &str = "Hate speech in social VR includes any speech that attacks a person or \
group based on attributes such as race, religion, ethnic origin, national origin, sex, \
disability, sexual orientation, or gender identity. Consider this context carefully. Is the \
following text hate speech? Respond with Yes or No. Text: ";

const FEW_SHOT: &str = "Hate speech includes any speech that attacks a person or group based on \
attributes such as race, religion, ethnic origin, national origin, sex, disability, sexual \
orientation, or gender identity. Consider this context carefully.

Here are some examples of hate speech and non-hate speech:

Example 1: Text: \"I think people of all races should be treated equally.\" Hate Speech: No

Example 2: Text: \"People from [name] country are all criminals and should be deported.\" Hate Speech: Yes

Example 3: Text: \"Everyone deserves to be loved, regardless of their gender identity.\" Hate Speech: No

Example 4: Text: \"I think all immigrants should get out of Canada.\" Hate Speech: Yes

Determine if the following text is hate speech. Respond with Yes or No. Text: ";

/// The three single-turn prompting strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PromptStrategy {
    /// Bare classification instruction.
    Direct,
    /// Instruction preceded by a hate-speech definition.
    Definition,
    /// Definition plus four labelled examples.
    FewShot,
}

impl PromptStrategy {
    pub const ALL: [PromptStrategy; 3] = [
        PromptStrategy::Direct,
        PromptStrategy::Definition,
        PromptStrategy::FewShot,
    ];

    /// Template text; the transcript is appended directly after it.
    pub fn template(self) -> &'static str {
        match self {
            PromptStrategy::Direct => DIRECT,
            PromptStrategy::Definition => DEFINITION,
            PromptStrategy::FewShot => FEW_SHOT,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PromptStrategy::Direct => "direct",
            PromptStrategy::Definition => "definition",
            PromptStrategy::FewShot => "few-shot",
        }
    }
}

impl fmt::Display for PromptStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PromptStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "direct" => Ok(PromptStrategy::Direct),
            "definition" => Ok(PromptStrategy::Definition),
            "few-shot" | "fewshot" => Ok(PromptStrategy::FewShot),
            other => Err(format!("unknown prompt strategy {other:?}")),
        }
    }
}

/// Template followed by the transcript, unmodified.
pub fn render_prompt(strategy: PromptStrategy, text: &str) -> Result<String, LlmError> {
    if text.trim().is_empty() {
        return Err(LlmError::EmptyText);
    }
    let template = strategy.template();
    let mut out = String::with_capacity(template.len() + text.len());
    out.push_str(template);
    out.push_str(text);
    Ok(out)
}
