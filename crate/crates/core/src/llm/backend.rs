use std::collections::VecDeque;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::Semaphore;

use super::{LlmBackendConfig, LlmError, LlmMode, PromptStrategy};
use crate::http::{self, AttemptError, RetryPolicy};

/// Single-turn chat completion: one user message in, reply text out.
#[async_trait]
pub trait ChatBackend: Send + Sync {
    async fn complete(&self, prompt: &str) -> Result<String, LlmError>;
}

pub fn chat_from_config(config: &LlmBackendConfig) -> Result<Arc<dyn ChatBackend>, LlmError> {
    config.validate()?;
    Ok(match config.mode {
        LlmMode::Network => Arc::new(HttpChat::new(config.clone())?),
        LlmMode::ScriptedMock => match &config.script {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| LlmError::Config(format!("{}: {e}", path.display())))?;
                let script: ChatScript = serde_json::from_str(&text)
                    .map_err(|e| LlmError::Config(format!("{}: {e}", path.display())))?;
                Arc::new(ScriptedChat::from_script(script))
            }
            None => Arc::new(ScriptedChat::always("No")),
        },
    })
}

pub struct HttpChat {
    client: reqwest::Client,
    config: LlmBackendConfig,
    token: Option<String>,
    permits: Semaphore,
}

impl HttpChat {
    pub fn new(config: LlmBackendConfig) -> Result<Self, LlmError> {
        config.validate()?;
        let token = http::bearer_token(config.auth_env.as_deref()).map_err(LlmError::Config)?;
        Ok(Self {
            client: reqwest::Client::new(),
            permits: Semaphore::new(config.max_in_flight),
            token,
            config,
        })
    }

    async fn attempt(&self, body: &serde_json::Value) -> Result<String, AttemptError> {
        let mut req = self.client.post(&self.config.endpoint).json(body);
        if let Some(token) = &self.token {
            req = req.bearer_auth(token);
        }
        let reply: serde_json::Value = http::send(req)
            .await?
            .json()
            .await
            .map_err(|e| AttemptError::Decode(e.to_string()))?;
        reply["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| AttemptError::Decode("reply has no choices[0].message.content".into()))
    }
}

#[async_trait]
impl ChatBackend for HttpChat {
    async fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        let _permit = self.permits.acquire().await.expect("semaphore never closed");
        let body = json!({
            "model": self.config.model,
            "temperature": self.config.temperature,
            "messages": [{ "role": "user", "content": prompt }],
        });
        let policy = RetryPolicy::new(self.config.timeout_s, self.config.max_retries);
        Ok(http::with_retries(policy, || self.attempt(&body)).await?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptRule {
    /// Case-insensitive substring of the transcript.
    pub contains: String,
    pub reply: String,
}

/// Rule table for [`ScriptedChat`]: first matching rule wins, else `default`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatScript {
    #[serde(default = "default_reply")]
    pub default: String,
    #[serde(default)]
    pub rules: Vec<ScriptRule>,
}

fn default_reply() -> String {
    "No".into()
}

/// Deterministic chat stand-in.
///
/// Replies come from a queue of one-shot steps if any remain, then from the rule table
/// matched against the transcript (the prompt minus any known template prefix).
#[derive(Debug, Default)]
pub struct ScriptedChat {
    script: Option<ChatScript>,
    queue: Mutex<VecDeque<Result<String, LlmError>>>,
    failure: Option<LlmError>,
    delay: Duration,
    prompts: Mutex<Vec<String>>,
}

impl ScriptedChat {
    pub fn always(reply: impl Into<String>) -> Self {
        Self::from_script(ChatScript {
            default: reply.into(),
            rules: Vec::new(),
        })
    }

    pub fn from_script(script: ChatScript) -> Self {
        Self {
            script: Some(script),
            ..Self::default()
        }
    }

    /// Queue one-shot replies or failures consumed before the rule table.
    pub fn then(self, step: Result<String, LlmError>) -> Self {
        self.queue.lock().unwrap().push_back(step);
        self
    }

    pub fn failing(mut self, error: LlmError) -> Self {
        self.failure = Some(error);
        self
    }

    pub fn with_delay(mut self, delay: Duration) -> Self {
        self.delay = delay;
        self
    }

    /// Every prompt received so far.
    pub fn prompts(&self) -> Vec<String> {
        self.prompts.lock().unwrap().clone()
    }

    fn transcript_of(prompt: &str) -> &str {
        PromptStrategy::ALL
            .iter()
            .find_map(|s| prompt.strip_prefix(s.template()))
            .unwrap_or(prompt)
    }
}

#[async_trait]
impl ChatBackend for ScriptedChat {
    async fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        self.prompts.lock().unwrap().push(prompt.to_string());
        if !self.delay.is_zero() {
            tokio::time::sleep(self.delay).await;
        }
        if let Some(err) = &self.failure {
            return Err(err.clone());
        }
        if let Some(step) = self.queue.lock().unwrap().pop_front() {
            return step;
        }
        let text = Self::transcript_of(prompt).to_lowercase();
        let script = self.script.as_ref();
        let reply = script
            .and_then(|s| {
                s.rules
                    .iter()
                    .find(|r| text.contains(&r.contains.to_lowercase()))
                    .map(|r| r.reply.clone())
            })
            .or_else(|| script.map(|s| s.default.clone()))
            .unwrap_or_else(default_reply);
        Ok(reply)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::render_prompt;

    #[tokio::test]
    async fn rules_ignore_template_text() {
        // The few-shot template itself mentions "criminals".
        let chat = ScriptedChat::from_script(ChatScript {
            default: "No".into(),
            rules: vec![ScriptRule {
                contains: "criminals".into(),
                reply: "Yes".into(),
            }],
        });
        let benign = render_prompt(PromptStrategy::FewShot, "lovely day").unwrap();
        assert_eq!(chat.complete(&benign).await.unwrap(), "No");
        let hateful = render_prompt(PromptStrategy::FewShot, "They are CRIMINALS").unwrap();
        assert_eq!(chat.complete(&hateful).await.unwrap(), "Yes");
        assert_eq!(chat.prompts().len(), 2);
    }

    #[tokio::test]
    async fn queued_steps_come_first() {
        let chat = ScriptedChat::always("No")
            .then(Ok("Yes".into()))
            .then(Err(LlmError::BackendError { status: Some(500), body: "x".into() }));
        assert_eq!(chat.complete("a").await.unwrap(), "Yes");
        assert!(chat.complete("a").await.is_err());
        assert_eq!(chat.complete("a").await.unwrap(), "No");
    }

    #[test]
    fn script_defaults() {
        let s: ChatScript = serde_json::from_str("{}").unwrap();
        assert_eq!(s.default, "No");
        assert!(s.rules.is_empty());
    }
}
