//! Chat-completion clients: an HTTP client for OpenAI-compatible endpoints
//! and a canned client for tests.

use std::collections::VecDeque;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

/// Requests sent by every [`HttpClient`] in this process.
static NETWORK_CALLS: AtomicUsize = AtomicUsize::new(0);

pub fn network_calls() -> usize {
    NETWORK_CALLS.load(Ordering::SeqCst)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: String,
    pub content: String,
}

impl Message {
    pub fn user(content: impl Into<String>) -> Message {
        Message { role: "user".into(), content: content.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LlmError {
    #[error("request failed: {0}")]
    Transport(String),
    #[error("unexpected response: {0}")]
    Response(String),
    #[error("token variable {0} is not set")]
    MissingToken(String),
    #[error("no canned replies left")]
    Exhausted,
}

pub trait LlmClient {
    fn complete(&mut self, messages: &[Message]) -> Result<String, LlmError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmConfig {
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token. The token
    /// itself is never stored or logged.
    pub token_env: Option<String>,
    pub timeout_s: u64,
    pub max_tokens: u32,
    pub temperature: f64,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            endpoint: "http://localhost:8000/v1/chat/completions".into(),
            model: "default".into(),
            token_env: Some("MOLPILOT_LLM_TOKEN".into()),
            timeout_s: 120,
            max_tokens: 1024,
            temperature: 0.0,
        }
    }
}

pub struct HttpClient {
    cfg: LlmConfig,
    agent: ureq::Agent,
}

impl HttpClient {
    pub fn new(cfg: LlmConfig) -> HttpClient {
        let agent = ureq::Agent::config_builder().timeout_global(Some(Duration::from_secs(cfg.timeout_s.max(1)))).build().into();
        HttpClient { cfg, agent }
    }
}

/// Text of the first choice in an OpenAI-style response body.
pub fn first_choice_text(body: &Value) -> Result<String, LlmError> {
    body.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| LlmError::Response("no choices[0].message.content".into()))
}

impl LlmClient for HttpClient {
    fn complete(&mut self, messages: &[Message]) -> Result<String, LlmError> {
        let body = json!({
            "model": self.cfg.model,
            "messages": messages,
            "max_tokens": self.cfg.max_tokens,
            "temperature": self.cfg.temperature,
        });
        let mut req = self.agent.post(&self.cfg.endpoint).header("Content-Type", "application/json");
        if let Some(var) = &self.cfg.token_env {
            match std::env::var(var) {
                Ok(token) => req = req.header("Authorization", &format!("Bearer {token}")),
                Err(_) => return Err(LlmError::MissingToken(var.clone())),
            }
        }
        NETWORK_CALLS.fetch_add(1, Ordering::SeqCst);
        let mut resp = req.send_json(&body).map_err(|e| LlmError::Transport(e.to_string()))?;
        let value: Value = resp.body_mut().read_json().map_err(|e| LlmError::Response(e.to_string()))?;
        first_choice_text(&value)
    }
}

/// Replays fixed replies in order and records every prompt it was sent.
#[derive(Debug, Clone, Default)]
pub struct CannedClient {
    replies: VecDeque<String>,
    pub prompts: Vec<String>,
}

impl CannedClient {
    pub fn new<I, S>(replies: I) -> CannedClient
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        CannedClient { replies: replies.into_iter().map(Into::into).collect(), prompts: Vec::new() }
    }

    pub fn calls(&self) -> usize {
        self.prompts.len()
    }

    pub fn remaining(&self) -> usize {
        self.replies.len()
    }
}

impl LlmClient for CannedClient {
    fn complete(&mut self, messages: &[Message]) -> Result<String, LlmError> {
        self.prompts.push(messages.iter().map(|m| m.content.as_str()).collect::<Vec<_>>().join("\n"));
        self.replies.pop_front().ok_or(LlmError::Exhausted)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canned_replies_in_order() {
        let mut c = CannedClient::new(["a", "b"]);
        assert_eq!(c.complete(&[Message::user("p")]).unwrap(), "a");
        assert_eq!(c.complete(&[Message::user("q")]).unwrap(), "b");
        assert_eq!(c.complete(&[Message::user("r")]), Err(LlmError::Exhausted));
        assert_eq!(c.calls(), 3);
    }

    #[test]
    fn first_choice() {
        let v = json!({"choices": [{"message": {"role": "assistant", "content": "Action: GENERATE"}}]});
        assert_eq!(first_choice_text(&v).unwrap(), "Action: GENERATE");
        assert!(first_choice_text(&json!({})).is_err());
    }
}
