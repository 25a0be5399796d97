//! Chat-completion gateway used by the router and the generator.
//!
//! [`ChatBackend`] is the single seam: [`HttpGateway`] talks to any
//! chat-completion compatible endpoint (OpenRouter by default), and
//! [`MockGateway`] replays a script for offline tests.

mod http;
mod mock;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use http::HttpGateway;
pub use mock::{prompt_digest, Matcher, MockGateway, ScriptedReply};

/// Environment variable holding the provider API key.
pub const API_KEY_ENV: &str = "GATEWAY_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChatRequest {
    pub model_name: String,
    pub system_text: String,
    pub user_text: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub request_id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FinishReason {
    Stop,
    Length,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChatReply {
    pub text: String,
    pub finish_reason: FinishReason,
    pub latency_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum GatewayErrorKind {
    Timeout,
    Transport,
    Provider(u16),
    Auth,
    MalformedReply,
    ScriptMiss { prompt_digest: String },
}

impl GatewayErrorKind {
    /// Transport failures, timeouts, 429 and 5xx are worth another attempt.
    pub fn is_retryable(&self) -> bool {
        match self {
            GatewayErrorKind::Timeout | GatewayErrorKind::Transport => true,
            GatewayErrorKind::Provider(status) => *status == 429 || (500..600).contains(status),
            _ => false,
        }
    }
}

impl fmt::Display for GatewayErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GatewayErrorKind::Timeout => f.write_str("timeout"),
            GatewayErrorKind::Transport => f.write_str("transport"),
            GatewayErrorKind::Provider(s) => write!(f, "provider status {s}"),
            GatewayErrorKind::Auth => f.write_str("auth"),
            GatewayErrorKind::MalformedReply => f.write_str("malformed reply"),
            GatewayErrorKind::ScriptMiss { prompt_digest } => {
                write!(f, "script miss for prompt {prompt_digest}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("gateway error ({kind}) for request {request_id}: {message}")]
pub struct GatewayError {
    pub kind: GatewayErrorKind,
    pub request_id: String,
    pub message: String,
}

pub trait ChatBackend: Send + Sync {
    fn chat(&self, req: &ChatRequest) -> Result<ChatReply, GatewayError>;
}

impl<T: ChatBackend + ?Sized> ChatBackend for &T {
    fn chat(&self, req: &ChatRequest) -> Result<ChatReply, GatewayError> {
        (**self).chat(req)
    }
}

impl<T: ChatBackend + ?Sized> ChatBackend for std::sync::Arc<T> {
    fn chat(&self, req: &ChatRequest) -> Result<ChatReply, GatewayError> {
        (**self).chat(req)
    }
}

/// An API key. Never printed.
#[derive(Clone, PartialEq, Eq)]
pub struct Secret(String);

impl Secret {
    pub fn new(value: impl Into<String>) -> Self {
        Self(value.into())
    }

    pub fn expose(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Secret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Secret([REDACTED])")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GatewayConfig {
    pub base_url: String,
    pub model: String,
    pub timeout_ms: u64,
    pub max_retries: u32,
    pub backoff_initial_ms: u64,
    pub backoff_multiplier: f64,
    #[serde(skip)]
    pub api_key: Option<Secret>,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        Self {
            base_url: "https://openrouter.ai/api/v1".to_string(),
            model: "openai/gpt-4o".to_string(),
            timeout_ms: 30_000,
            max_retries: 2,
            backoff_initial_ms: 250,
            backoff_multiplier: 2.0,
            api_key: None,
        }
    }
}

impl GatewayConfig {
    /// Fill the API key from [`API_KEY_ENV`] if it is set.
    pub fn with_env_key(mut self) -> Self {
        if let Ok(key) = std::env::var(API_KEY_ENV) {
            if !key.is_empty() {
                self.api_key = Some(Secret::new(key));
            }
        }
        self
    }

    /// Upper bound on the wall time of one `chat` call.
    pub fn wall_time_bound(&self) -> std::time::Duration {
        std::time::Duration::from_millis(self.timeout_ms * (u64::from(self.max_retries) + 1))
    }
}

/// Per-call model settings shared by routing and generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSettings {
    pub model_name: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
}

impl Default for ModelSettings {
    fn default() -> Self {
        Self {
            model_name: GatewayConfig::default().model,
            temperature: 0.1,
            max_output_tokens: 800,
        }
    }
}

impl ModelSettings {
    pub fn request(&self, system_text: &str, user_text: &str, request_id: &str) -> ChatRequest {
        ChatRequest {
            model_name: self.model_name.clone(),
            system_text: system_text.to_string(),
            user_text: user_text.to_string(),
            temperature: self.temperature,
            max_output_tokens: self.max_output_tokens,
            request_id: request_id.to_string(),
        }
    }
}
