use std::sync::Mutex;

use sha2::{Digest, Sha256};

use super::{ChatBackend, ChatReply, ChatRequest, FinishReason, GatewayError, GatewayErrorKind};

#[derive(Debug, Clone)]
pub enum Matcher {
    /// Matches when the system or user text contains the string.
    Substring(String),
    /// Matches the hex SHA-256 of the prompt, see [`prompt_digest`].
    PromptHash(String),
}

#[derive(Debug, Clone)]
pub enum ScriptedReply {
    Text(String),
    Fail(GatewayErrorKind),
}

/// Hex SHA-256 over `system_text`, a blank line, then `user_text`.
pub fn prompt_digest(req: &ChatRequest) -> String {
    let mut h = Sha256::new();
    h.update(req.system_text.as_bytes());
    h.update(b"\n\n");
    h.update(req.user_text.as_bytes());
    hex::encode(h.finalize())
}

/// Scripted gateway for offline tests: the first matching rule wins, and an
/// unmatched prompt is a `ScriptMiss` error.
#[derive(Debug, Default)]
pub struct MockGateway {
    script: Vec<(Matcher, ScriptedReply)>,
    calls: Mutex<Vec<ChatRequest>>,
}

impl MockGateway {
    pub fn new(script: Vec<(Matcher, ScriptedReply)>) -> Self {
        Self {
            script,
            calls: Mutex::new(Vec::new()),
        }
    }

    pub fn reply_on(mut self, needle: impl Into<String>, text: impl Into<String>) -> Self {
        self.script
            .push((Matcher::Substring(needle.into()), ScriptedReply::Text(text.into())));
        self
    }

    pub fn fail_on(mut self, needle: impl Into<String>, kind: GatewayErrorKind) -> Self {
        self.script
            .push((Matcher::Substring(needle.into()), ScriptedReply::Fail(kind)));
        self
    }

    /// Requests seen so far, in order.
    pub fn calls(&self) -> Vec<ChatRequest> {
        self.calls.lock().expect("mock call log poisoned").clone()
    }
}

impl ChatBackend for MockGateway {
    fn chat(&self, req: &ChatRequest) -> Result<ChatReply, GatewayError> {
        self.calls
            .lock()
            .expect("mock call log poisoned")
            .push(req.clone());
        let digest = prompt_digest(req);
        let hit = self.script.iter().find(|(m, _)| match m {
            Matcher::Substring(s) => req.user_text.contains(s) || req.system_text.contains(s),
            Matcher::PromptHash(h) => *h == digest,
        });
        match hit {
            Some((_, ScriptedReply::Text(text))) => Ok(ChatReply {
                text: text.clone(),
                finish_reason: FinishReason::Stop,
                latency_ms: 0,
            }),
            Some((_, ScriptedReply::Fail(kind))) => Err(GatewayError {
                kind: kind.clone(),
                request_id: req.request_id.clone(),
                message: "scripted failure".to_string(),
            }),
            None => Err(GatewayError {
                kind: GatewayErrorKind::ScriptMiss {
                    prompt_digest: digest.clone(),
                },
                request_id: req.request_id.clone(),
                message: format!("no scripted reply for prompt {digest}"),
            }),
        }
    }
}
