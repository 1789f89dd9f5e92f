//! Core data model: sessions, messages, assistance levels and pipeline traces.
//!
//! Every other module speaks in these types. The JSON encoding produced by
//! the serde derives here is the canonical wire and storage format.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::guardrails::GuardrailVerdict;
use crate::llm::{BackendKind, LlmExchange, StepTag};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DomainError {
    #[error("message content is empty")]
    EmptyContent,
    #[error("two consecutive {0} messages are not allowed")]
    AlternationViolation(Role),
    #[error("session is closed")]
    SessionClosed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Student,
    Tutor,
    System,
}

impl std::fmt::Display for Role {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Role::Student => "student",
            Role::Tutor => "tutor",
            Role::System => "system",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
    pub timestamp: DateTime<Utc>,
    pub sequence: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionState {
    Active,
    Closed,
}

/// One conversation between a student and the tutor about one exercise.
///
/// Sessions are append-only. Ordering is defined by `sequence`, timestamps
/// are informational.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    pub exercise_id: String,
    pub student_id: String,
    pub messages: Vec<Message>,
    pub created_at: DateTime<Utc>,
    pub state: SessionState,
}

impl Session {
    /// A fresh active session with a random id. Whether `exercise_id` names
    /// a real fixture is checked by the caller (see [`crate::service`]).
    pub fn new(exercise_id: impl Into<String>, student_id: impl Into<String>) -> Self {
        Self::with_id(uuid::Uuid::new_v4().to_string(), exercise_id, student_id)
    }

    pub fn with_id(
        session_id: impl Into<String>,
        exercise_id: impl Into<String>,
        student_id: impl Into<String>,
    ) -> Self {
        Session {
            session_id: session_id.into(),
            exercise_id: exercise_id.into(),
            student_id: student_id.into(),
            messages: Vec::new(),
            created_at: Utc::now(),
            state: SessionState::Active,
        }
    }

    /// Appends a message, enforcing non-empty content and role alternation
    /// (system messages are ignored for alternation).
    pub fn append_message(
        &mut self,
        role: Role,
        content: impl Into<String>,
    ) -> Result<&Message, DomainError> {
        if self.state == SessionState::Closed {
            return Err(DomainError::SessionClosed);
        }
        let content = content.into();
        if content.trim().is_empty() {
            return Err(DomainError::EmptyContent);
        }
        if role != Role::System {
            let last_conversational =
                self.messages.iter().rev().find(|m| m.role != Role::System).map(|m| m.role);
            if last_conversational == Some(role) {
                return Err(DomainError::AlternationViolation(role));
            }
        }
        let sequence = self.messages.last().map_or(0, |m| m.sequence + 1);
        self.messages.push(Message { role, content, timestamp: Utc::now(), sequence });
        Ok(self.messages.last().expect("just pushed"))
    }

    pub fn close(&mut self) {
        self.state = SessionState::Closed;
    }

    pub fn is_active(&self) -> bool {
        self.state == SessionState::Active
    }
}

/// Ordered ladder of hint concreteness. `L3` is the most concrete.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AssistanceLevel {
    L1,
    L2,
    L3,
}

impl AssistanceLevel {
    pub const ALL: [AssistanceLevel; 3] = [AssistanceLevel::L3, AssistanceLevel::L2, AssistanceLevel::L1];

    /// Next level down; `L1` is the floor.
    pub fn lower(self) -> AssistanceLevel {
        match self {
            AssistanceLevel::L3 => AssistanceLevel::L2,
            _ => AssistanceLevel::L1,
        }
    }
}

impl std::fmt::Display for AssistanceLevel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AssistanceLevel::L1 => "L1",
            AssistanceLevel::L2 => "L2",
            AssistanceLevel::L3 => "L3",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    RejectedOffTopic,
    Answered,
    Fallback,
    /// The backend failed mid-pipeline; the student got the unavailability notice.
    Unavailable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Draft {
    pub text: String,
    pub verdict: GuardrailVerdict,
    pub assistance_level: AssistanceLevel,
}

/// What the trace keeps of one model call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LlmCallSummary {
    pub step_tag: StepTag,
    pub backend: BackendKind,
    pub latency_ms: u64,
    pub prompt_chars: usize,
    pub completion: String,
}

impl From<&LlmExchange> for LlmCallSummary {
    fn from(exchange: &LlmExchange) -> Self {
        LlmCallSummary {
            step_tag: exchange.prompt.step_tag,
            backend: exchange.backend,
            latency_ms: exchange.latency_ms,
            prompt_chars: exchange.prompt.render().chars().count(),
            completion: exchange.completion.clone(),
        }
    }
}

/// Audit record of one run of the tutoring chain for one student message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineTrace {
    pub message_sequence: u64,
    pub relevance_score: Option<u8>,
    pub gated: bool,
    pub selected_files: Vec<String>,
    pub build_log_requested: bool,
    pub drafts: Vec<Draft>,
    pub refinement_count: u32,
    pub llm_calls: Vec<LlmCallSummary>,
    pub outcome: Outcome,
    #[serde(default)]
    pub warnings: Vec<String>,
    #[serde(default)]
    pub error: Option<String>,
}

impl PipelineTrace {
    pub fn new(message_sequence: u64) -> Self {
        PipelineTrace {
            message_sequence,
            relevance_score: None,
            gated: false,
            selected_files: Vec::new(),
            build_log_requested: false,
            drafts: Vec::new(),
            refinement_count: 0,
            llm_calls: Vec::new(),
            outcome: Outcome::Unavailable,
            warnings: Vec::new(),
            error: None,
        }
    }

    pub fn calls_for(&self, step: StepTag) -> usize {
        self.llm_calls.iter().filter(|c| c.step_tag == step).count()
    }

    /// Checks the structural invariants every finished trace must satisfy.
    /// Returns a description of the first broken one.
    pub fn check_invariants(&self, threshold: u8, max_refinements: u32) -> Result<(), String> {
        let below = self.relevance_score.is_some_and(|s| s < threshold);
        if self.gated != below {
            return Err(format!("gated={} but relevance_score={:?}", self.gated, self.relevance_score));
        }
        if self.gated && (!self.selected_files.is_empty() || !self.drafts.is_empty()) {
            return Err("gated trace carries selections or drafts".into());
        }
        let expected_refinements = self.drafts.len().saturating_sub(1) as u32;
        if self.refinement_count != expected_refinements {
            return Err(format!(
                "refinement_count={} with {} drafts",
                self.refinement_count,
                self.drafts.len()
            ));
        }
        if self.refinement_count > max_refinements {
            return Err(format!("refinement_count {} exceeds cap", self.refinement_count));
        }
        if self.outcome == Outcome::Answered && !self.drafts.last().is_some_and(|d| d.verdict.passed) {
            return Err("answered without a passing final draft".into());
        }
        if self.drafts.windows(2).any(|w| w[1].assistance_level > w[0].assistance_level) {
            return Err("assistance level increased between drafts".into());
        }
        Ok(())
    }
}
