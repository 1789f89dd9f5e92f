use std::collections::VecDeque;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{BackendKind, ChatPrompt, LlmBackend, LlmError, LlmExchange, StepTag};

#[derive(Debug, Error)]
pub enum ScriptError {
    #[error("cannot read mock script {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("mock script parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown step tag `{tag}` in mock entry {index}")]
    UnknownStepTag { index: usize, tag: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockEntry {
    pub expect_step: StepTag,
    pub expect_substring: Option<String>,
    pub reply: String,
}

impl MockEntry {
    pub fn new(expect_step: StepTag, reply: impl Into<String>) -> Self {
        MockEntry { expect_step, expect_substring: None, reply: reply.into() }
    }

    pub fn expecting(mut self, substring: impl Into<String>) -> Self {
        self.expect_substring = Some(substring.into());
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MockScript {
    pub entries: Vec<MockEntry>,
}

impl MockScript {
    pub fn new(entries: Vec<MockEntry>) -> Self {
        MockScript { entries }
    }

    /// Parses the JSON array form. Entries keep their file order.
    pub fn parse(text: &str) -> Result<Self, ScriptError> {
        if text.trim().is_empty() {
            return Ok(MockScript::default());
        }
        #[derive(Deserialize)]
        struct RawEntry {
            expect_step: String,
            #[serde(default)]
            expect_substring: Option<String>,
            reply: String,
        }
        let raw: Vec<RawEntry> = serde_json::from_str(text)
            .map_err(|e| ScriptError::Parse { line: e.line(), message: e.to_string() })?;
        let entries = raw
            .into_iter()
            .enumerate()
            .map(|(index, r)| {
                let expect_step = r
                    .expect_step
                    .parse::<StepTag>()
                    .map_err(|tag| ScriptError::UnknownStepTag { index, tag })?;
                Ok(MockEntry { expect_step, expect_substring: r.expect_substring, reply: r.reply })
            })
            .collect::<Result<Vec<_>, ScriptError>>()?;
        Ok(MockScript { entries })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("mock script serializes")
    }
}

pub fn load_mock_script(path: impl AsRef<Path>) -> Result<MockScript, ScriptError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| ScriptError::Io { path: path.display().to_string(), source })?;
    MockScript::parse(&text)
}

/// Replays a [`MockScript`] strictly in order. Each entry answers exactly one
/// call. A mismatching call does not consume the entry.
#[derive(Debug, Default)]
pub struct MockBackend {
    remaining: Mutex<VecDeque<MockEntry>>,
}

impl MockBackend {
    pub fn new(script: MockScript) -> Self {
        MockBackend { remaining: Mutex::new(script.entries.into()) }
    }

    pub fn remaining(&self) -> usize {
        self.remaining.lock().expect("mock lock").len()
    }
}

impl LlmBackend for MockBackend {
    fn complete(&self, prompt: &ChatPrompt) -> Result<LlmExchange, LlmError> {
        let mut queue = self.remaining.lock().expect("mock lock");
        let entry = queue.front().ok_or(LlmError::MockExhausted(prompt.step_tag))?;
        if entry.expect_step != prompt.step_tag {
            return Err(LlmError::MockMismatch(format!(
                "expected a {} call, got {}",
                entry.expect_step, prompt.step_tag
            )));
        }
        if let Some(needle) = &entry.expect_substring {
            if !prompt.render().contains(needle.as_str()) {
                return Err(LlmError::MockMismatch(format!(
                    "{} prompt does not contain {needle:?}",
                    prompt.step_tag
                )));
            }
        }
        let entry = queue.pop_front().expect("front checked");
        Ok(LlmExchange {
            prompt: prompt.clone(),
            completion: entry.reply,
            latency_ms: 0,
            backend: BackendKind::Mock,
        })
    }

    fn kind(&self) -> BackendKind {
        BackendKind::Mock
    }
}
