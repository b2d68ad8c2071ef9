//! Timeout + retry loop shared by the speech-to-text and chat clients.

use std::future::Future;
use std::time::Duration;

/// Why a single attempt failed.
#[derive(Debug, Clone)]
pub(crate) enum AttemptError {
    Timeout,
    Status { status: u16, body: String },
    Transport(String),
    /// Response arrived but could not be decoded; never retried.
    Decode(String),
}

impl AttemptError {
    fn retryable(&self) -> bool {
        match self {
            AttemptError::Timeout | AttemptError::Transport(_) => true,
            AttemptError::Status { status, .. } => *status == 408 || *status == 429 || *status >= 500,
            AttemptError::Decode(_) => false,
        }
    }
}

/// Terminal outcome after retries.
#[derive(Debug, Clone)]
pub(crate) enum RetryFailure {
    Timeout { attempts: u32 },
    Backend { status: Option<u16>, body: String },
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct RetryPolicy {
    pub timeout: Duration,
    pub max_retries: u32,
    pub backoff: Duration,
}

impl RetryPolicy {
    pub fn new(timeout_s: f64, max_retries: u32) -> Self {
        Self {
            timeout: Duration::from_secs_f64(timeout_s),
            max_retries,
            backoff: Duration::from_millis(50),
        }
    }

    /// Exponential backoff, capped at one second.
    fn delay(&self, retry: u32) -> Duration {
        (self.backoff * 2u32.saturating_pow(retry)).min(Duration::from_secs(1))
    }
}

/// Run `attempt` up to `max_retries + 1` times, each bounded by the policy timeout.
pub(crate) async fn with_retries<T, F, Fut>(policy: RetryPolicy, mut attempt: F) -> Result<T, RetryFailure>
where
    F: FnMut() -> Fut,
    Fut: Future<Output = Result<T, AttemptError>>,
{
    let mut tries = 0u32;
    loop {
        tries += 1;
        let result = match tokio::time::timeout(policy.timeout, attempt()).await {
            Ok(r) => r,
            Err(_) => Err(AttemptError::Timeout),
        };
        let err = match result {
            Ok(v) => return Ok(v),
            Err(e) => e,
        };
        if tries > policy.max_retries || !err.retryable() {
            return Err(match err {
                AttemptError::Timeout => RetryFailure::Timeout { attempts: tries },
                AttemptError::Status { status, body } => RetryFailure::Backend {
                    status: Some(status),
                    body,
                },
                AttemptError::Transport(body) | AttemptError::Decode(body) => {
                    RetryFailure::Backend { status: None, body }
                }
            });
        }
        log::debug!("attempt {tries} failed ({err:?}); retrying");
        tokio::time::sleep(policy.delay(tries - 1)).await;
    }
}

/// Send a prepared request and map transport/status failures onto [`AttemptError`].
pub(crate) async fn send(request: reqwest::RequestBuilder) -> Result<reqwest::Response, AttemptError> {
    let response = request.send().await.map_err(|e| {
        if e.is_timeout() {
            AttemptError::Timeout
        } else {
            AttemptError::Transport(e.to_string())
        }
    })?;
    let status = response.status();
    if status.is_success() {
        Ok(response)
    } else {
        let body = response.text().await.unwrap_or_default();
        Err(AttemptError::Status {
            status: status.as_u16(),
            body,
        })
    }
}

/// Read a bearer token from the named environment variable.
pub(crate) fn bearer_token(env_var: Option<&str>) -> Result<Option<String>, String> {
    match env_var {
        None => Ok(None),
        Some(name) => std::env::var(name)
            .map(Some)
            .map_err(|_| format!("environment variable {name} is not set")),
    }
}
