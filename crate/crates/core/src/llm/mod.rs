//! Chat-completion gateway.
//!
//! Every model call in the tutoring chain goes through [`LlmBackend`]. Two
//! backends ship: [`HttpBackend`] speaks the OpenAI-compatible
//! chat-completions wire format, and [`MockBackend`] replays a scripted list
//! of replies so the whole pipeline can run deterministically in tests.

mod http;
mod mock;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use http::{HttpBackend, HttpConfig, RetryPolicy};
pub use mock::{load_mock_script, MockBackend, MockEntry, MockScript, ScriptError};

/// Temperature used for the parse-sensitive steps.
pub const DETERMINISTIC_TEMPERATURE: f32 = 0.0;
pub const GENERATION_TEMPERATURE: f32 = 0.5;
pub const DEFAULT_MAX_TOKENS: u32 = 1024;

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("backend unavailable after {attempts} attempt(s): {reason}")]
    BackendUnavailable { attempts: u32, reason: String },
    #[error("backend rejected the request ({status}): {body}")]
    BackendRejected { status: u16, body: String },
    #[error("malformed backend response: {0}")]
    MalformedResponse(String),
    #[error("mock script exhausted (no entry left for a {0} call)")]
    MockExhausted(StepTag),
    #[error("mock script mismatch: {0}")]
    MockMismatch(String),
    #[error("invalid prompt: {0}")]
    InvalidPrompt(String),
    #[error("backend configuration: {0}")]
    Config(String),
}

/// Which step of the tutoring chain a prompt belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepTag {
    Relevance,
    FileSelection,
    Generation,
    SelfCheck,
}

impl StepTag {
    pub fn as_str(self) -> &'static str {
        match self {
            StepTag::Relevance => "relevance",
            StepTag::FileSelection => "file_selection",
            StepTag::Generation => "generation",
            StepTag::SelfCheck => "self_check",
        }
    }

    /// First line every system message of this step must carry.
    pub fn tag_line(self) -> String {
        format!("STEP: {}", self.as_str())
    }

    pub fn default_temperature(self) -> f32 {
        match self {
            StepTag::Generation => GENERATION_TEMPERATURE,
            _ => DETERMINISTIC_TEMPERATURE,
        }
    }
}

impl std::str::FromStr for StepTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "relevance" => Ok(StepTag::Relevance),
            "file_selection" => Ok(StepTag::FileSelection),
            "generation" => Ok(StepTag::Generation),
            "self_check" => Ok(StepTag::SelfCheck),
            other => Err(other.to_string()),
        }
    }
}

impl std::fmt::Display for StepTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChatRole {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: ChatRole,
    pub content: String,
}

/// A validated request for one model call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatPrompt {
    pub step_tag: StepTag,
    pub messages: Vec<ChatMessage>,
    pub temperature: f32,
    pub max_tokens: u32,
}

impl ChatPrompt {
    /// Builds a prompt from a system message and a single user turn, using
    /// the step's default temperature and the default token cap.
    ///
    /// The system text must already begin with the `STEP: <tag>` line; use
    /// [`tagged_system`] to add it.
    pub fn new(step_tag: StepTag, system: String, user: String) -> Result<Self, LlmError> {
        Self::from_messages(
            step_tag,
            vec![
                ChatMessage { role: ChatRole::System, content: system },
                ChatMessage { role: ChatRole::User, content: user },
            ],
            step_tag.default_temperature(),
            DEFAULT_MAX_TOKENS,
        )
    }

    pub fn from_messages(
        step_tag: StepTag,
        messages: Vec<ChatMessage>,
        temperature: f32,
        max_tokens: u32,
    ) -> Result<Self, LlmError> {
        let first = messages.first().ok_or_else(|| LlmError::InvalidPrompt("no messages".into()))?;
        if first.role != ChatRole::System || first.content.trim().is_empty() {
            return Err(LlmError::InvalidPrompt("first message must be a non-empty system message".into()));
        }
        if first.content.lines().next() != Some(step_tag.tag_line().as_str()) {
            return Err(LlmError::InvalidPrompt(format!(
                "system message must start with `{}`",
                step_tag.tag_line()
            )));
        }
        if !(0.0..=2.0).contains(&temperature) {
            return Err(LlmError::InvalidPrompt(format!("temperature {temperature} outside [0, 2]")));
        }
        if max_tokens == 0 {
            return Err(LlmError::InvalidPrompt("max_tokens must be positive".into()));
        }
        Ok(ChatPrompt { step_tag, messages, temperature, max_tokens })
    }

    /// Flat text form used for substring matching and size accounting.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, m) in self.messages.iter().enumerate() {
            if i > 0 {
                out.push_str("\n\n");
            }
            let role = match m.role {
                ChatRole::System => "[system]",
                ChatRole::User => "[user]",
                ChatRole::Assistant => "[assistant]",
            };
            out.push_str(role);
            out.push('\n');
            out.push_str(&m.content);
        }
        out
    }
}

/// Prefixes `body` with the step's tag line.
pub fn tagged_system(step: StepTag, body: &str) -> String {
    format!("{}\n{}", step.tag_line(), body)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Http,
    Mock,
}

/// One request/response pair. `completion` is the raw backend output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmExchange {
    pub prompt: ChatPrompt,
    pub completion: String,
    pub latency_ms: u64,
    pub backend: BackendKind,
}

pub trait LlmBackend: Send + Sync {
    fn complete(&self, prompt: &ChatPrompt) -> Result<LlmExchange, LlmError>;

    fn kind(&self) -> BackendKind;
}

impl<T: LlmBackend + ?Sized> LlmBackend for Arc<T> {
    fn complete(&self, prompt: &ChatPrompt) -> Result<LlmExchange, LlmError> {
        (**self).complete(prompt)
    }

    fn kind(&self) -> BackendKind {
        (**self).kind()
    }
}

impl<T: LlmBackend + ?Sized> LlmBackend for &T {
    fn complete(&self, prompt: &ChatPrompt) -> Result<LlmExchange, LlmError> {
        (**self).complete(prompt)
    }

    fn kind(&self) -> BackendKind {
        (**self).kind()
    }
}
