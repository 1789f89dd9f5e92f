//! The four-step tutoring chain: relevance gate, file selection, grounded
//! generation, and self-check refinement.
//!
//! [`Pipeline::handle_message`] runs one student message through the chain
//! and returns the reply together with a [`PipelineTrace`] describing every
//! model call, score, selection and draft.

use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::context::{
    assemble_context, render_file_listing, ContextBundle, ContextError, ExerciseFixture, RepositorySnapshot,
    BUILD_LOG_ENTRY, DEFAULT_CONTEXT_BUDGET,
};
use crate::domain::{AssistanceLevel, LlmCallSummary, Message, Outcome, PipelineTrace, Role, Session};
use crate::guardrails::refine::{llm_self_check, refine_until_safe, RefineError};
use crate::guardrails::template::{Layout, PromptTemplate, RELEVANCE_RETRY_INSTRUCTION};
use crate::guardrails::ScanConfig;
use crate::llm::{tagged_system, BackendKind, ChatPrompt, LlmBackend, LlmError, LlmExchange, StepTag};

pub const REJECTION_REPLY: &str = "Your question seems to be off-topic for this exercise. Please rephrase it and focus on the programming task at hand.";
pub const UNAVAILABLE_REPLY: &str = "The tutor is temporarily unavailable. Please try again in a moment.";

pub const DEFAULT_RELEVANCE_THRESHOLD: u8 = 5;
pub const DEFAULT_MAX_REFINEMENTS: u32 = 3;
/// Score assumed when the model never produces a parseable one.
pub const FAIL_OPEN_SCORE: u8 = 5;
pub const RELEVANCE_HISTORY_WINDOW: usize = 6;
pub const SELECTION_HISTORY_WINDOW: usize = 6;
pub const GENERATION_HISTORY_WINDOW: usize = 10;
pub const MAX_SELECTED_FILES: usize = 5;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("session is closed")]
    SessionClosed,
    #[error("message content is empty")]
    EmptyContent,
    #[error(transparent)]
    Context(#[from] ContextError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub relevance_threshold: u8,
    pub max_refinements: u32,
    pub context_budget: usize,
    pub scan: ScanConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            relevance_threshold: DEFAULT_RELEVANCE_THRESHOLD,
            max_refinements: DEFAULT_MAX_REFINEMENTS,
            context_budget: DEFAULT_CONTEXT_BUDGET,
            scan: ScanConfig::default(),
        }
    }
}

impl PipelineConfig {
    /// Upper bound on model calls for one message: two relevance calls, one
    /// selection call, and one generation plus one self-check per draft.
    pub fn max_llm_calls(&self) -> usize {
        2 + 1 + 2 * (self.max_refinements as usize + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelevanceScore {
    pub value: u8,
    pub raw_completion: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Proceed,
    Reject,
}

pub fn gate(score: &RelevanceScore, threshold: u8) -> Gate {
    if score.value < threshold {
        Gate::Reject
    } else {
        Gate::Proceed
    }
}

/// First integer in `1..=10` in the completion, scanning maximal digit runs
/// left to right.
pub fn parse_relevance(completion: &str) -> Option<u8> {
    let bytes = completion.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i].is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let run = &completion[start..i];
            if let Ok(v) = run.parse::<u32>() {
                if (1..=10).contains(&v) {
                    return Some(v as u8);
                }
            }
        } else {
            i += 1;
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FileSelection {
    pub requested: Vec<String>,
    pub accepted: Vec<String>,
    pub include_build_log: bool,
    pub dropped: Vec<String>,
}

/// Validates the model's file choices against the snapshot.
///
/// Each non-empty line is one item; a leading `-` or `*` bullet is
/// ignored, so a bare bullet counts as an empty line. Real paths are accepted in emission order up to
/// [`MAX_SELECTED_FILES`]; `BUILD_LOG` turns on the build log when one
/// exists; anything else is dropped.
pub fn parse_file_selection(
    completion: &str,
    snapshot: &RepositorySnapshot,
    build_log_available: bool,
) -> FileSelection {
    let mut selection = FileSelection::default();
    for line in completion.lines() {
        let item = line.trim();
        let item = item
            .strip_prefix(['-', '*'])
            .filter(|rest| rest.is_empty() || rest.starts_with(char::is_whitespace))
            .unwrap_or(item)
            .trim();
        if item.is_empty() {
            continue;
        }
        selection.requested.push(item.to_string());
        if item == BUILD_LOG_ENTRY {
            if build_log_available {
                selection.include_build_log = true;
            } else {
                selection.dropped.push(item.to_string());
            }
        } else if snapshot.contains(item) {
            if selection.accepted.len() < MAX_SELECTED_FILES && !selection.accepted.iter().any(|a| a == item)
            {
                selection.accepted.push(item.to_string());
            }
        } else {
            selection.dropped.push(item.to_string());
        }
    }
    selection
}

pub fn render_history(messages: &[Message], window: usize) -> String {
    let start = messages.len().saturating_sub(window);
    let recent = &messages[start..];
    if recent.is_empty() {
        return "(no earlier messages)".to_string();
    }
    recent
        .iter()
        .map(|m| {
            let who = match m.role {
                Role::Student => "Student",
                Role::Tutor => "Tutor",
                Role::System => "System",
            };
            format!("{who}: {}", m.content)
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Backend wrapper that keeps every completed exchange, in call order.
struct Recorder<'a> {
    inner: &'a dyn LlmBackend,
    log: Mutex<Vec<LlmExchange>>,
}

impl<'a> Recorder<'a> {
    fn new(inner: &'a dyn LlmBackend) -> Self {
        Recorder { inner, log: Mutex::new(Vec::new()) }
    }

    fn summaries(&self) -> Vec<LlmCallSummary> {
        self.log.lock().expect("recorder lock").iter().map(LlmCallSummary::from).collect()
    }
}

impl LlmBackend for Recorder<'_> {
    fn complete(&self, prompt: &ChatPrompt) -> Result<LlmExchange, LlmError> {
        let exchange = self.inner.complete(prompt)?;
        self.log.lock().expect("recorder lock").push(exchange.clone());
        Ok(exchange)
    }

    fn kind(&self) -> BackendKind {
        self.inner.kind()
    }
}

fn render_err(e: crate::guardrails::TemplateError) -> LlmError {
    LlmError::InvalidPrompt(e.to_string())
}

/// Reply and trace for one student message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Turn {
    pub reply: String,
    pub trace: PipelineTrace,
}

pub struct Pipeline {
    backend: Arc<dyn LlmBackend>,
    template: PromptTemplate,
    config: PipelineConfig,
}

impl Pipeline {
    pub fn new(backend: Arc<dyn LlmBackend>, template: PromptTemplate, config: PipelineConfig) -> Self {
        Pipeline { backend, template, config }
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn template(&self) -> &PromptTemplate {
        &self.template
    }

    fn relevance_prompt(
        &self,
        history: &[Message],
        latest: &Message,
        exercise_title: &str,
        retry: bool,
    ) -> Result<ChatPrompt, LlmError> {
        let history = render_history(history, RELEVANCE_HISTORY_WINDOW);
        let system = self
            .template
            .render(Layout::RelevanceSystem, &[("exercise_title", exercise_title)])
            .map_err(render_err)?;
        let mut user = self
            .template
            .render(Layout::RelevanceUser, &[("history", &history), ("question", &latest.content)])
            .map_err(render_err)?;
        if retry {
            user.push_str("\n\n");
            user.push_str(RELEVANCE_RETRY_INSTRUCTION);
        }
        ChatPrompt::new(StepTag::Relevance, tagged_system(StepTag::Relevance, &system), user)
    }

    /// Step 1. Returns the score and, on fail-open, a warning.
    pub fn assess_relevance(
        &self,
        backend: &dyn LlmBackend,
        history: &[Message],
        latest: &Message,
        exercise_title: &str,
    ) -> Result<(RelevanceScore, Option<String>), LlmError> {
        let first = backend.complete(&self.relevance_prompt(history, latest, exercise_title, false)?)?;
        if let Some(value) = parse_relevance(&first.completion) {
            return Ok((RelevanceScore { value, raw_completion: first.completion }, None));
        }
        let second = backend.complete(&self.relevance_prompt(history, latest, exercise_title, true)?)?;
        if let Some(value) = parse_relevance(&second.completion) {
            return Ok((RelevanceScore { value, raw_completion: second.completion }, None));
        }
        let warning = format!(
            "relevance unparseable twice ({:?}, {:?}); assuming {FAIL_OPEN_SCORE}",
            first.completion, second.completion
        );
        Ok((RelevanceScore { value: FAIL_OPEN_SCORE, raw_completion: second.completion }, Some(warning)))
    }

    /// Step 2.
    pub fn select_files(
        &self,
        backend: &dyn LlmBackend,
        snapshot: &RepositorySnapshot,
        build_log_available: bool,
        history: &[Message],
        latest: &Message,
    ) -> Result<FileSelection, LlmError> {
        let listing = render_file_listing(snapshot, build_log_available);
        let history = render_history(history, SELECTION_HISTORY_WINDOW);
        let system = self.template.render(Layout::FileSelectionSystem, &[]).map_err(render_err)?;
        let user = self
            .template
            .render(
                Layout::FileSelectionUser,
                &[("file_listing", &listing), ("history", &history), ("question", &latest.content)],
            )
            .map_err(render_err)?;
        let prompt =
            ChatPrompt::new(StepTag::FileSelection, tagged_system(StepTag::FileSelection, &system), user)?;
        let exchange = backend.complete(&prompt)?;
        Ok(parse_file_selection(&exchange.completion, snapshot, build_log_available))
    }

    /// Step 3. Returns the raw draft.
    pub fn generate_response(
        &self,
        backend: &dyn LlmBackend,
        bundle: &ContextBundle,
        history: &[Message],
        latest: &Message,
        level: AssistanceLevel,
    ) -> Result<String, LlmError> {
        let system = self.template.render_system_prompt(level);
        let context = bundle.render();
        let history = render_history(history, GENERATION_HISTORY_WINDOW);
        let user = self
            .template
            .render(
                Layout::GenerationUser,
                &[("context_bundle", &context), ("history", &history), ("question", &latest.content)],
            )
            .map_err(render_err)?;
        let prompt = ChatPrompt::new(StepTag::Generation, system, user)?;
        Ok(backend.complete(&prompt)?.completion)
    }

    /// Runs the whole chain for `latest_content`, a new student message on
    /// `session`. The session is not modified; the caller appends the
    /// student message and the reply.
    pub fn handle_message(
        &self,
        session: &Session,
        fixture: &ExerciseFixture,
        latest_content: &str,
    ) -> Result<Turn, PipelineError> {
        if !session.is_active() {
            return Err(PipelineError::SessionClosed);
        }
        if latest_content.trim().is_empty() {
            return Err(PipelineError::EmptyContent);
        }
        let history = &session.messages[..];
        let latest = Message {
            role: Role::Student,
            content: latest_content.to_string(),
            timestamp: chrono::Utc::now(),
            sequence: history.last().map_or(0, |m| m.sequence + 1),
        };

        let recorder = Recorder::new(self.backend.as_ref());
        let mut trace = PipelineTrace::new(latest.sequence);
        let result = self.run_chain(&recorder, fixture, history, &latest, &mut trace);
        trace.llm_calls = recorder.summaries();

        let reply = match result {
            Ok(reply) => reply,
            Err(ChainError::Context(e)) => return Err(e.into()),
            Err(ChainError::Backend(e)) => {
                tracing::warn!(error = %e, "backend failure during pipeline");
                trace.outcome = Outcome::Unavailable;
                trace.error = Some(e.to_string());
                UNAVAILABLE_REPLY.to_string()
            }
        };
        Ok(Turn { reply, trace })
    }

    fn run_chain(
        &self,
        backend: &dyn LlmBackend,
        fixture: &ExerciseFixture,
        history: &[Message],
        latest: &Message,
        trace: &mut PipelineTrace,
    ) -> Result<String, ChainError> {
        let (score, warning) = self.assess_relevance(backend, history, latest, &fixture.title())?;
        trace.warnings.extend(warning);
        trace.relevance_score = Some(score.value);
        if gate(&score, self.config.relevance_threshold) == Gate::Reject {
            trace.gated = true;
            trace.outcome = Outcome::RejectedOffTopic;
            return Ok(REJECTION_REPLY.to_string());
        }

        let build_log_available = fixture.build_log.is_some();
        let selection =
            self.select_files(backend, &fixture.repository, build_log_available, history, latest)?;
        if !selection.dropped.is_empty() {
            trace.warnings.push(format!("dropped unknown selections: {:?}", selection.dropped));
        }
        trace.selected_files = selection.accepted.clone();
        trace.build_log_requested = selection.include_build_log;

        let bundle = assemble_context(
            fixture,
            &selection.accepted,
            selection.include_build_log,
            self.config.context_budget,
        )?;

        let refined = refine_until_safe(
            |level| self.generate_response(backend, &bundle, history, latest, level),
            |draft| llm_self_check(backend, &self.template, draft),
            &self.config.scan,
            AssistanceLevel::L3,
            self.config.max_refinements,
        );
        match refined {
            Ok(r) => {
                trace.refinement_count = r.drafts.len().saturating_sub(1) as u32;
                trace.drafts = r.drafts;
                trace.warnings.extend(r.warnings);
                trace.outcome = r.outcome;
                Ok(r.final_text)
            }
            Err(RefineError { source, drafts, warnings }) => {
                trace.refinement_count = drafts.len().saturating_sub(1) as u32;
                trace.drafts = drafts;
                trace.warnings.extend(warnings);
                Err(ChainError::Backend(source))
            }
        }
    }
}

enum ChainError {
    Backend(LlmError),
    Context(ContextError),
}

impl From<LlmError> for ChainError {
    fn from(e: LlmError) -> Self {
        ChainError::Backend(e)
    }
}

impl From<ContextError> for ChainError {
    fn from(e: ContextError) -> Self {
        ChainError::Context(e)
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::context::TestResult;
    use crate::guardrails::FALLBACK_REPLY;
    use crate::llm::{MockBackend, MockEntry, MockScript};

    /// Independent oracle: split on non-digits, take the first token whose
    /// value lies in 1..=10.
    fn relevance_oracle(s: &str) -> Option<u8> {
        s.split(|c: char| !c.is_ascii_digit())
            .filter(|t| !t.is_empty())
            .filter_map(|t| t.parse::<u64>().ok())
            .find(|v| (1..=10).contains(v))
            .map(|v| v as u8)
    }

    #[test]
    fn relevance_parse_examples() {
        assert_eq!(parse_relevance("8"), Some(8));
        assert_eq!(relevance_oracle("Relevance: 7/10 because…"), Some(7));
        assert_eq!(parse_relevance("Relevance: 7/10 because…"), Some(7));
        assert_eq!(parse_relevance("maybe"), None);
        assert_eq!(parse_relevance("0, 11, then 10"), Some(10));
        assert_eq!(parse_relevance("100"), None);
    }

    proptest::proptest! {
        #[test]
        fn relevance_parse_matches_oracle(s in "[a-z0-9 :/.,-]{0,30}") {
            proptest::prop_assert_eq!(parse_relevance(&s), relevance_oracle(&s));
        }
    }

    #[test]
    fn gate_boundaries() {
        let s = |v| RelevanceScore { value: v, raw_completion: String::new() };
        assert_eq!(gate(&s(4), 5), Gate::Reject);
        assert_eq!(gate(&s(5), 5), Gate::Proceed);
        assert_eq!(gate(&s(10), 5), Gate::Proceed);
        assert_eq!(gate(&s(1), 5), Gate::Reject);
    }

    fn snapshot(paths: &[&str]) -> RepositorySnapshot {
        RepositorySnapshot::new(paths.iter().map(|p| (p.to_string(), format!("// {p}\n"))).collect())
    }

    #[test]
    fn selection_with_build_log() {
        let snap = snapshot(&["src/Main.java"]);
        let sel = parse_file_selection("src/Main.java\nBUILD_LOG", &snap, true);
        assert_eq!(sel.accepted, vec!["src/Main.java"]);
        assert!(sel.include_build_log);
        assert!(sel.dropped.is_empty());
    }

    #[test]
    fn selection_drops_hallucinations() {
        let snap = snapshot(&["src/Main.java"]);
        let sel = parse_file_selection("src/Ghost.java", &snap, true);
        assert!(sel.accepted.is_empty());
        assert_eq!(sel.dropped, vec!["src/Ghost.java"]);
    }

    #[test]
    fn selection_takes_first_five() {
        let paths: Vec<String> = (0..7).map(|i| format!("src/F{i}.java")).collect();
        let refs: Vec<&str> = paths.iter().map(String::as_str).collect();
        let snap = snapshot(&refs);
        let mut emitted = paths.clone();
        emitted.reverse();
        let sel = parse_file_selection(&emitted.join("\n"), &snap, false);
        let oracle: Vec<String> = emitted.iter().take(5).cloned().collect();
        assert_eq!(sel.accepted, oracle);
        assert!(sel.dropped.is_empty());
        assert_eq!(sel.requested.len(), 7);
    }

    #[test]
    fn selection_build_log_unavailable_is_dropped() {
        let sel = parse_file_selection("BUILD_LOG", &snapshot(&[]), false);
        assert!(!sel.include_build_log);
        assert_eq!(sel.dropped, vec!["BUILD_LOG"]);
    }

    #[test]
    fn selection_tolerates_bullets() {
        let snap = snapshot(&["a.py", "b.py"]);
        let sel = parse_file_selection("- a.py\n\n* b.py\n- a.py\n- \n*\n", &snap, false);
        assert_eq!(sel.accepted, vec!["a.py", "b.py"]);
        assert!(sel.dropped.is_empty());
        assert_eq!(sel.requested.len(), 3);
    }

    #[test]
    fn history_window() {
        let mut s = Session::new("x", "y");
        for i in 0..8 {
            let role = if i % 2 == 0 { Role::Student } else { Role::Tutor };
            s.append_message(role, format!("m{i}")).unwrap();
        }
        let h = render_history(&s.messages, 6);
        assert!(!h.contains("m1\n") && h.starts_with("Student: m2"));
        assert_eq!(h.lines().count(), 6);
        assert_eq!(render_history(&[], 6), "(no earlier messages)");
    }

    fn fixture() -> ExerciseFixture {
        let mut files = BTreeMap::new();
        files.insert("src/BubbleSort.java".into(), "public class BubbleSort {}\n".into());
        ExerciseFixture {
            exercise_id: "bubblesort".into(),
            problem_statement: "# Bubble Sort\nSort ascending.\n".into(),
            repository: RepositorySnapshot::new(files),
            build_log: Some("BUILD OK\n".into()),
            test_feedback: Some(vec![TestResult {
                test_name: "testSort".into(),
                passed: false,
                message: "expected [1, 2, 3]".into(),
            }]),
            warnings: vec![],
        }
    }

    fn run(entries: Vec<MockEntry>) -> (Turn, usize) {
        let mock = Arc::new(MockBackend::new(MockScript::new(entries)));
        let p = Pipeline::new(mock.clone(), PromptTemplate::default(), PipelineConfig::default());
        let session = Session::new("bubblesort", "s1");
        let turn = p.handle_message(&session, &fixture(), "How do I start?").unwrap();
        (turn, mock.remaining())
    }

    const HINT: &str = "Have you considered what happens when the list is empty?";

    #[test]
    fn rejection_uses_one_call() {
        let (turn, left) = run(vec![MockEntry::new(StepTag::Relevance, "3")]);
        assert_eq!(turn.reply, REJECTION_REPLY);
        assert_eq!(turn.trace.outcome, Outcome::RejectedOffTopic);
        assert_eq!(turn.trace.llm_calls.len(), 1);
        assert!(turn.trace.gated);
        assert_eq!(left, 0);
    }

    #[test]
    fn happy_path_four_calls() {
        let (turn, left) = run(vec![
            MockEntry::new(StepTag::Relevance, "7").expecting("Bubble Sort"),
            MockEntry::new(StepTag::FileSelection, "src/BubbleSort.java")
                .expecting("- src/BubbleSort.java\n- BUILD_LOG"),
            MockEntry::new(StepTag::Generation, HINT).expecting("public class BubbleSort"),
            MockEntry::new(StepTag::SelfCheck, "PASS").expecting(HINT),
        ]);
        assert_eq!(turn.reply, HINT);
        assert_eq!(turn.trace.outcome, Outcome::Answered);
        assert_eq!(turn.trace.llm_calls.len(), 4);
        assert_eq!(turn.trace.selected_files, vec!["src/BubbleSort.java"]);
        assert_eq!(left, 0);
        turn.trace.check_invariants(5, 3).unwrap();
    }

    #[test]
    fn relevance_retry_then_fail_open() {
        let (turn, _) = run(vec![
            MockEntry::new(StepTag::Relevance, "maybe"),
            MockEntry::new(StepTag::Relevance, "unclear").expecting(RELEVANCE_RETRY_INSTRUCTION),
            MockEntry::new(StepTag::FileSelection, ""),
            MockEntry::new(StepTag::Generation, HINT),
            MockEntry::new(StepTag::SelfCheck, "PASS"),
        ]);
        assert_eq!(turn.trace.relevance_score, Some(FAIL_OPEN_SCORE));
        assert!(turn.trace.warnings.iter().any(|w| w.contains("unparseable")));
        assert_eq!(turn.trace.outcome, Outcome::Answered);
    }

    #[test]
    fn retry_succeeds_on_second_call() {
        let (turn, _) =
            run(vec![MockEntry::new(StepTag::Relevance, "hmm"), MockEntry::new(StepTag::Relevance, "2")]);
        assert_eq!(turn.trace.relevance_score, Some(2));
        assert_eq!(turn.trace.llm_calls.len(), 2);
        assert_eq!(turn.reply, REJECTION_REPLY);
    }

    #[test]
    fn all_drafts_fail_gives_fallback() {
        let mut entries = vec![
            MockEntry::new(StepTag::Relevance, "9"),
            MockEntry::new(StepTag::FileSelection, "src/BubbleSort.java"),
        ];
        for _ in 0..4 {
            entries.push(MockEntry::new(StepTag::Generation, HINT));
            entries.push(MockEntry::new(StepTag::SelfCheck, "FAIL"));
        }
        let (turn, left) = run(entries);
        assert_eq!(turn.reply, FALLBACK_REPLY);
        assert_eq!(turn.trace.outcome, Outcome::Fallback);
        assert_eq!(turn.trace.refinement_count, 3);
        assert_eq!(turn.trace.llm_calls.len(), 10);
        assert_eq!(left, 0);
        turn.trace.check_invariants(5, 3).unwrap();
    }

    #[test]
    fn code_draft_is_caught_before_self_check() {
        let (turn, _) = run(vec![
            MockEntry::new(StepTag::Relevance, "9"),
            MockEntry::new(StepTag::FileSelection, ""),
            MockEntry::new(StepTag::Generation, "Here:\n```java\nfor (int i = 0; i < n; i++) {}\n```"),
            MockEntry::new(StepTag::Generation, HINT),
            MockEntry::new(StepTag::SelfCheck, "PASS"),
        ]);
        assert_eq!(turn.trace.drafts.len(), 2);
        assert_eq!(turn.trace.drafts[1].assistance_level, AssistanceLevel::L2);
        assert_eq!(turn.reply, HINT);
        assert_eq!(turn.trace.calls_for(StepTag::SelfCheck), 1);
    }

    #[test]
    fn backend_failure_is_unavailable() {
        let (turn, _) = run(vec![
            MockEntry::new(StepTag::Relevance, "9"),
            MockEntry::new(StepTag::FileSelection, ""),
            MockEntry::new(StepTag::Generation, HINT),
        ]);
        assert_eq!(turn.reply, UNAVAILABLE_REPLY);
        assert_eq!(turn.trace.outcome, Outcome::Unavailable);
        assert!(turn.trace.error.as_deref().unwrap().contains("exhausted"));
        assert_eq!(turn.trace.drafts.len(), 0);
        assert_eq!(turn.trace.llm_calls.len(), 3);
    }

    #[test]
    fn closed_session_rejected() {
        let p = Pipeline::new(
            Arc::new(MockBackend::new(MockScript::default())),
            PromptTemplate::default(),
            PipelineConfig::default(),
        );
        let mut s = Session::new("bubblesort", "s1");
        s.close();
        assert!(matches!(p.handle_message(&s, &fixture(), "hi"), Err(PipelineError::SessionClosed)));
    }

    #[test]
    fn call_bound_default_is_eleven() {
        assert_eq!(PipelineConfig::default().max_llm_calls(), 11);
    }
}
