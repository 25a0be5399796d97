use std::thread;
use std::time::{Duration, Instant};

use serde_json::{json, Value};
use tracing::{debug, warn};

use super::{
    ChatBackend, ChatReply, ChatRequest, FinishReason, GatewayConfig, GatewayError,
    GatewayErrorKind,
};

/// Chat-completion client for OpenAI-compatible endpoints.
///
/// Uses a blocking HTTP client; inside an async runtime, call it from a
/// blocking task.
pub struct HttpGateway {
    cfg: GatewayConfig,
    client: reqwest::blocking::Client,
}

impl HttpGateway {
    pub fn new(cfg: GatewayConfig) -> Result<Self, GatewayError> {
        let client = reqwest::blocking::Client::builder()
            .build()
            .map_err(|e| GatewayError {
                kind: GatewayErrorKind::Transport,
                request_id: String::new(),
                message: format!("cannot build HTTP client: {e}"),
            })?;
        Ok(Self { cfg, client })
    }

    pub fn config(&self) -> &GatewayConfig {
        &self.cfg
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.cfg.base_url.trim_end_matches('/'))
    }

    fn redact(&self, text: &str) -> String {
        match &self.cfg.api_key {
            Some(key) if !key.expose().is_empty() => text.replace(key.expose(), "[REDACTED]"),
            _ => text.to_string(),
        }
    }

    fn error(&self, req: &ChatRequest, kind: GatewayErrorKind, message: &str) -> GatewayError {
        GatewayError {
            kind,
            request_id: req.request_id.clone(),
            message: self.redact(message),
        }
    }

    fn attempt(&self, req: &ChatRequest, timeout: Duration) -> Result<ChatReply, GatewayError> {
        let key = self
            .cfg
            .api_key
            .as_ref()
            .ok_or_else(|| self.error(req, GatewayErrorKind::Auth, "no API key configured"))?;
        let body = json!({
            "model": req.model_name,
            "messages": [
                {"role": "system", "content": req.system_text},
                {"role": "user", "content": req.user_text},
            ],
            "temperature": req.temperature,
            "max_tokens": req.max_output_tokens,
        });
        let started = Instant::now();
        let resp = self
            .client
            .post(self.endpoint())
            .bearer_auth(key.expose())
            .header("X-Request-Id", &req.request_id)
            .timeout(timeout)
            .json(&body)
            .send()
            .map_err(|e| self.transport_error(req, &e))?;

        let status = resp.status().as_u16();
        if status == 401 || status == 403 {
            return Err(self.error(req, GatewayErrorKind::Auth, &format!("provider returned {status}")));
        }
        if !resp.status().is_success() {
            let text = resp.text().unwrap_or_default();
            let snippet: String = text.chars().take(200).collect();
            return Err(self.error(
                req,
                GatewayErrorKind::Provider(status),
                &format!("provider returned {status}: {snippet}"),
            ));
        }
        let payload: Value = resp.json().map_err(|e| self.transport_error(req, &e))?;
        let choice = &payload["choices"][0];
        let text = choice["message"]["content"].as_str().ok_or_else(|| {
            self.error(req, GatewayErrorKind::MalformedReply, "reply has no choices[0].message.content")
        })?;
        let finish_reason = match choice["finish_reason"].as_str() {
            Some("stop") | None => FinishReason::Stop,
            Some("length") => FinishReason::Length,
            Some(_) => FinishReason::Error,
        };
        Ok(ChatReply {
            text: text.to_string(),
            finish_reason,
            latency_ms: started.elapsed().as_millis() as u64,
        })
    }

    fn transport_error(&self, req: &ChatRequest, e: &reqwest::Error) -> GatewayError {
        let kind = if e.is_timeout() {
            GatewayErrorKind::Timeout
        } else if e.is_decode() {
            GatewayErrorKind::MalformedReply
        } else {
            GatewayErrorKind::Transport
        };
        self.error(req, kind, &e.to_string())
    }
}

impl ChatBackend for HttpGateway {
    /// Retries transport errors, timeouts, 429 and 5xx with exponential
    /// backoff. The whole call, backoff included, finishes within
    /// `(max_retries + 1) * timeout_ms`.
    fn chat(&self, req: &ChatRequest) -> Result<ChatReply, GatewayError> {
        let timeout = Duration::from_millis(self.cfg.timeout_ms);
        let deadline = Instant::now() + self.cfg.wall_time_bound();
        let mut backoff = Duration::from_millis(self.cfg.backoff_initial_ms);
        let mut attempt = 0u32;
        loop {
            let remaining = deadline.saturating_duration_since(Instant::now());
            if remaining.is_zero() {
                return Err(self.error(req, GatewayErrorKind::Timeout, "wall-time budget exhausted"));
            }
            debug!(request_id = %req.request_id, attempt, "chat request");
            match self.attempt(req, timeout.min(remaining)) {
                Ok(reply) => return Ok(reply),
                Err(err) if err.kind.is_retryable() && attempt < self.cfg.max_retries => {
                    warn!(
                        request_id = %req.request_id,
                        attempt,
                        kind = %err.kind,
                        "retrying chat request"
                    );
                    let remaining = deadline.saturating_duration_since(Instant::now());
                    thread::sleep(backoff.min(remaining));
                    backoff = backoff.mul_f64(self.cfg.backoff_multiplier.max(1.0));
                    attempt += 1;
                }
                Err(err) => return Err(err),
            }
        }
    }
}
