//! Proptest strategies and a step-routed backend shared by the property
//! and acceptance suites.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::sync::Mutex;

use proptest::prelude::*;

use socratic_tutor::context::{ExerciseFixture, RepositorySnapshot, TestResult};
use socratic_tutor::llm::{BackendKind, ChatPrompt, LlmBackend, LlmError, LlmExchange, StepTag};

/// Replies from one queue per step, so a script stays aligned no matter
/// which steps the pipeline actually reaches.
pub struct StepBackend {
    queues: Mutex<HashMap<StepTag, VecDeque<String>>>,
    prompts: Mutex<Vec<ChatPrompt>>,
}

impl StepBackend {
    pub fn new(script: &[(StepTag, String)]) -> Self {
        let mut queues: HashMap<StepTag, VecDeque<String>> = HashMap::new();
        for (step, reply) in script {
            queues.entry(*step).or_default().push_back(reply.clone());
        }
        StepBackend { queues: Mutex::new(queues), prompts: Mutex::new(Vec::new()) }
    }

    /// Every prompt received, in call order.
    pub fn prompts(&self) -> Vec<ChatPrompt> {
        self.prompts.lock().unwrap().clone()
    }
}

impl LlmBackend for StepBackend {
    fn complete(&self, prompt: &ChatPrompt) -> Result<LlmExchange, LlmError> {
        self.prompts.lock().unwrap().push(prompt.clone());
        let reply = self
            .queues
            .lock()
            .unwrap()
            .get_mut(&prompt.step_tag)
            .and_then(VecDeque::pop_front)
            .ok_or(LlmError::MockExhausted(prompt.step_tag))?;
        Ok(LlmExchange {
            prompt: prompt.clone(),
            completion: reply,
            latency_ms: 0,
            backend: BackendKind::Mock,
        })
    }

    fn kind(&self) -> BackendKind {
        BackendKind::Mock
    }
}

const NOISE_WORDS: &[&str] = &[
    "score",
    "relevance",
    "is",
    "about",
    "the",
    "question",
    "rated",
    "I",
    "would",
    "say",
    "out",
    "of",
    ":",
    "-",
];

fn noise() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(NOISE_WORDS), 0..5).prop_map(|w| w.join(" "))
}

/// Numbers that are never a valid score: 0, or at least 11.
fn decoy() -> impl Strategy<Value = String> {
    prop_oneof![Just("0".to_string()), (11u32..1000).prop_map(|n| n.to_string())]
}

/// A relevance completion and the score it encodes by construction
/// (`None` for garbled text with no valid score).
pub fn relevance_completion() -> impl Strategy<Value = (String, Option<u8>)> {
    let scored =
        (noise(), prop::collection::vec(decoy(), 0..3), 1u8..=10, noise(), prop::option::of(1u8..=10))
            .prop_map(|(pre, decoys, score, post, trailing)| {
                let mut parts = vec![pre];
                parts.extend(decoys);
                parts.push(score.to_string());
                parts.push(post);
                if let Some(t) = trailing {
                    parts.push(t.to_string());
                }
                (parts.join(" "), Some(score))
            });
    let garbled = prop_oneof![
        "[a-zA-Z !?.,]{0,40}",
        (noise(), prop::collection::vec(decoy(), 1..3)).prop_map(|(n, d)| format!("{n} {}", d.join(" "))),
    ]
    .prop_map(|s| (s, None));
    prop_oneof![3 => scored, 1 => garbled]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DraftKind {
    Prose,
    Fenced,
    CodeRun,
    Numbered,
}

impl DraftKind {
    /// Whether the draft was built to contain code or step lists.
    pub fn leaky(self) -> bool {
        self != DraftKind::Prose
    }
}

const PROSE_OPENERS: &[&str] =
    &["What", "Consider", "Look at", "Think about", "Which", "Notice", "Compare", "Try tracing"];
const PROSE_WORDS: &[&str] = &[
    "the",
    "loop",
    "index",
    "array",
    "last",
    "element",
    "pass",
    "swap",
    "value",
    "condition",
    "bound",
    "test",
    "length",
    "neighbour",
    "order",
    "when",
    "your",
    "each",
    "happens",
];
const CODE_LINES: &[&str] = &[
    "int tmp = values[i];",
    "values[i] = values[i + 1];",
    "for (int i = 0; i < n - 1; i++) {",
    "while (swapped) {",
    "}",
    "return values;",
    "if(values[i] > values[i + 1]) {",
    "swapped = true;",
];

fn prose_line() -> impl Strategy<Value = String> {
    (prop::sample::select(PROSE_OPENERS), prop::collection::vec(prop::sample::select(PROSE_WORDS), 3..10))
        .prop_map(|(o, w)| format!("{o} {}?", w.join(" ")))
}

fn prose() -> impl Strategy<Value = String> {
    prop::collection::vec(prose_line(), 1..4).prop_map(|l| l.join("\n"))
}

fn code_lines(min: usize) -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(prop::sample::select(CODE_LINES).prop_map(str::to_string), min..8)
}

/// A generated draft and the kind it was built as.
pub fn draft() -> impl Strategy<Value = (String, DraftKind)> {
    let fenced = (prose(), code_lines(1), prop::sample::select(vec!["```", "```java", "~~~"]), prose())
        .prop_map(|(a, code, fence, b)| {
            let close = if fence.starts_with('~') { "~~~" } else { "```" };
            (format!("{a}\n{fence}\n{}\n{close}\n{b}", code.join("\n")), DraftKind::Fenced)
        });
    let code_run = (prose(), code_lines(3), prose())
        .prop_map(|(a, code, b)| (format!("{a}\n{}\n{b}", code.join("\n")), DraftKind::CodeRun));
    let numbered =
        (prose(), prop::collection::vec(prose_line(), 4..7), any::<bool>()).prop_map(|(a, steps, words)| {
            let body: Vec<String> = steps
                .iter()
                .enumerate()
                .map(|(i, s)| if words { format!("Step {} {s}", i + 1) } else { format!("{}. {s}", i + 1) })
                .collect();
            (format!("{a}\n{}", body.join("\n")), DraftKind::Numbered)
        });
    prop_oneof![
        2 => prose().prop_map(|p| (p, DraftKind::Prose)),
        1 => fenced,
        1 => code_run,
        1 => numbered,
    ]
}

/// Self-check completions, including ones that wave leaky drafts through.
pub fn self_check_reply() -> impl Strategy<Value = String> {
    prop_oneof![
        3 => Just("PASS".to_string()),
        2 => Just("FAIL: reveals the fix".to_string()),
        1 => Just("pass - looks fine".to_string()),
        1 => "[a-z ]{0,12}",
    ]
}

fn path() -> impl Strategy<Value = String> {
    (
        prop::collection::vec("[a-z]{1,6}", 0..3),
        "[a-z]{1,8}",
        prop::sample::select(vec!["java", "py", "c", "md"]),
    )
        .prop_map(|(dirs, stem, ext)| {
            let mut p = dirs.join("/");
            if !p.is_empty() {
                p.push('/');
            }
            format!("{p}{stem}.{ext}")
        })
}

/// File contents drawn from lowercase letters, spaces and newlines only, so
/// names containing `_` or uppercase letters can never occur inside them.
fn content() -> impl Strategy<Value = String> {
    "[a-z \n]{0,400}"
}

pub fn snapshot() -> impl Strategy<Value = BTreeMap<String, String>> {
    prop::collection::btree_map(path(), content(), 0..8)
}

/// Random fixture; statement lengths stay small so that most budgets bind.
pub fn fixture() -> impl Strategy<Value = ExerciseFixture> {
    (
        "# [A-Z][a-z]{2,10}\n[a-z \n]{0,200}",
        snapshot(),
        prop::option::of("[a-z0-9 :\n]{0,600}"),
        prop::option::of(prop::collection::vec(("[a-zA-Z]{1,12}", any::<bool>(), "[a-z ]{0,40}"), 0..5)),
    )
        .prop_map(|(statement, files, build_log, tests)| ExerciseFixture {
            exercise_id: "generated".into(),
            problem_statement: statement,
            repository: RepositorySnapshot::new(files),
            build_log,
            test_feedback: tests.map(|t| {
                t.into_iter()
                    .map(|(test_name, passed, message)| TestResult { test_name, passed, message })
                    .collect()
            }),
            warnings: Vec::new(),
        })
}

/// Names that cannot be real snapshot paths or substrings of generated
/// content: they always contain `_` and an uppercase letter.
pub fn ghost_name() -> impl Strategy<Value = String> {
    "GHOST_[A-Z]{2,6}_[a-z]{1,5}\\.(java|py)"
}

/// A file-selection completion mixing real paths, invented names,
/// `BUILD_LOG`, bullets and blank lines.
pub fn selection_completion(real: Vec<String>) -> impl Strategy<Value = String> {
    let real_item = if real.is_empty() { ghost_name().boxed() } else { prop::sample::select(real).boxed() };
    let item = prop_oneof![3 => real_item, 2 => ghost_name(), 1 => Just("BUILD_LOG".to_string()), 1 => Just(String::new())];
    let bullet = prop::sample::select(vec!["", "- ", "* ", "  "]);
    prop::collection::vec((bullet, item), 0..10)
        .prop_map(|items| items.into_iter().map(|(b, i)| format!("{b}{i}")).collect::<Vec<_>>().join("\n"))
}
