//! Exercise fixtures and the budgeted context bundle that grounds hint
//! generation.
//!
//! A fixture directory stands in for the learning-management system:
//!
//! ```text
//! <root>/problem.md      problem statement (required)
//! <root>/repo/**         student repository snapshot
//! <root>/buildlog.txt    latest build log (optional)
//! <root>/tests.json      [{"test_name", "passed", "message"}] (optional)
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Component, Path};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Files larger than this are left out of the snapshot.
pub const MAX_FILE_BYTES: u64 = 256 * 1024;
pub const DEFAULT_CONTEXT_BUDGET: usize = 24_000;
pub const BUILD_LOG_TAIL_LINES: usize = 100;
pub const TRUNCATION_MARKER: &str = "[...truncated...]";
/// Pseudo-entry in the file listing that stands for the build log.
pub const BUILD_LOG_ENTRY: &str = "BUILD_LOG";

#[derive(Debug, Error)]
pub enum ContextError {
    #[error("fixture root {0} is unreadable: {1}")]
    UnreadableRoot(String, #[source] std::io::Error),
    #[error("fixture {0} has no problem.md")]
    MissingProblemStatement(String),
    #[error("fixture {0} has an empty problem statement")]
    EmptyProblemStatement(String),
    #[error("tests.json in {path} is malformed: {message}")]
    MalformedTestFeedback { path: String, message: String },
    #[error("selected path {0} is not part of the repository snapshot")]
    UnknownPath(String),
    #[error("budget {budget} is smaller than the problem statement ({needed} chars)")]
    BudgetTooSmall { budget: usize, needed: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestResult {
    pub test_name: String,
    pub passed: bool,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepositorySnapshot {
    pub files: BTreeMap<String, String>,
    pub captured_at: DateTime<Utc>,
}

impl RepositorySnapshot {
    pub fn new(files: BTreeMap<String, String>) -> Self {
        RepositorySnapshot { files, captured_at: Utc::now() }
    }

    pub fn contains(&self, path: &str) -> bool {
        self.files.contains_key(path)
    }

    pub fn paths(&self) -> impl Iterator<Item = &str> {
        self.files.keys().map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExerciseFixture {
    pub exercise_id: String,
    pub problem_statement: String,
    pub repository: RepositorySnapshot,
    pub build_log: Option<String>,
    pub test_feedback: Option<Vec<TestResult>>,
    /// Files skipped during ingestion and why.
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl ExerciseFixture {
    /// First markdown heading of the problem statement, else the exercise id.
    pub fn title(&self) -> String {
        self.problem_statement
            .lines()
            .map(str::trim)
            .find_map(|l| l.strip_prefix('#').map(|h| h.trim_start_matches('#').trim()))
            .filter(|t| !t.is_empty())
            .map(str::to_string)
            .unwrap_or_else(|| self.exercise_id.clone())
    }
}

/// Loads a fixture directory. The exercise id is the directory name.
pub fn load_fixture(root: impl AsRef<Path>) -> Result<ExerciseFixture, ContextError> {
    let root = root.as_ref();
    let display = root.display().to_string();
    let meta = fs::metadata(root).map_err(|e| ContextError::UnreadableRoot(display.clone(), e))?;
    if !meta.is_dir() {
        return Err(ContextError::UnreadableRoot(
            display,
            std::io::Error::new(std::io::ErrorKind::NotADirectory, "not a directory"),
        ));
    }
    let exercise_id =
        root.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| display.clone());

    let problem_statement = match fs::read_to_string(root.join("problem.md")) {
        Ok(s) => s,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(ContextError::MissingProblemStatement(display))
        }
        Err(e) => return Err(ContextError::UnreadableRoot(display, e)),
    };
    if problem_statement.trim().is_empty() {
        return Err(ContextError::EmptyProblemStatement(display));
    }

    let mut warnings = Vec::new();
    let mut files = BTreeMap::new();
    let repo = root.join("repo");
    if repo.is_dir() {
        ingest_dir(&repo, &repo, &mut files, &mut warnings)
            .map_err(|e| ContextError::UnreadableRoot(display.clone(), e))?;
    }

    let build_log = read_optional(&root.join("buildlog.txt"))
        .map_err(|e| ContextError::UnreadableRoot(display.clone(), e))?;
    let test_feedback = match read_optional(&root.join("tests.json"))
        .map_err(|e| ContextError::UnreadableRoot(display.clone(), e))?
    {
        Some(text) => Some(serde_json::from_str::<Vec<TestResult>>(&text).map_err(|e| {
            ContextError::MalformedTestFeedback { path: display.clone(), message: e.to_string() }
        })?),
        None => None,
    };

    for w in &warnings {
        tracing::warn!(fixture = %exercise_id, "{w}");
    }

    Ok(ExerciseFixture {
        exercise_id,
        problem_statement,
        repository: RepositorySnapshot::new(files),
        build_log,
        test_feedback,
        warnings,
    })
}

fn read_optional(path: &Path) -> std::io::Result<Option<String>> {
    match fs::read_to_string(path) {
        Ok(s) => Ok(Some(s)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(e),
    }
}

fn ingest_dir(
    base: &Path,
    dir: &Path,
    files: &mut BTreeMap<String, String>,
    warnings: &mut Vec<String>,
) -> std::io::Result<()> {
    let mut entries = fs::read_dir(dir)?.collect::<Result<Vec<_>, _>>()?;
    entries.sort_by_key(|e| e.file_name());
    for entry in entries {
        let path = entry.path();
        let file_type = entry.file_type()?;
        if file_type.is_dir() {
            ingest_dir(base, &path, files, warnings)?;
            continue;
        }
        if !file_type.is_file() {
            continue;
        }
        let Some(rel) = normalize_relative(path.strip_prefix(base).expect("under base")) else {
            warnings.push(format!("skipped {}: path is not representable", path.display()));
            continue;
        };
        let size = entry.metadata()?.len();
        if size > MAX_FILE_BYTES {
            warnings.push(format!("skipped {rel}: {size} bytes exceeds {MAX_FILE_BYTES}"));
            continue;
        }
        let bytes = fs::read(&path)?;
        match String::from_utf8(bytes) {
            Ok(text) if !text.contains('\0') => {
                files.insert(rel, text);
            }
            _ => warnings.push(format!("skipped {rel}: not valid UTF-8 text")),
        }
    }
    Ok(())
}

/// Forward-slash relative form of `path`, or `None` if it has traversal,
/// root, or non-UTF-8 components.
pub fn normalize_relative(path: &Path) -> Option<String> {
    let mut parts = Vec::new();
    for component in path.components() {
        match component {
            Component::Normal(p) => parts.push(p.to_str()?.to_string()),
            Component::CurDir => {}
            _ => return None,
        }
    }
    (!parts.is_empty()).then(|| parts.join("/"))
}

/// One path per line, sorted, each prefixed with `- `. A final
/// `- BUILD_LOG` line is added when a build log is available.
pub fn render_file_listing(snapshot: &RepositorySnapshot, build_log_available: bool) -> String {
    let mut lines: Vec<String> = snapshot.paths().map(|p| format!("- {p}")).collect();
    if build_log_available {
        lines.push(format!("- {BUILD_LOG_ENTRY}"));
    }
    lines.join("\n")
}

/// `PASS|FAIL <name>: <message>`, one line per test.
pub fn render_test_feedback(results: &[TestResult]) -> String {
    results
        .iter()
        .map(|t| format!("{} {}: {}", if t.passed { "PASS" } else { "FAIL" }, t.test_name, t.message))
        .collect::<Vec<_>>()
        .join("\n")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextBundle {
    pub problem_statement: String,
    pub selected_file_contents: Vec<(String, String)>,
    pub test_feedback_rendered: String,
    pub build_log_excerpt: Option<String>,
    pub total_chars: usize,
}

impl ContextBundle {
    /// Text form embedded into the generation prompt.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str("## Problem statement\n");
        out.push_str(&self.problem_statement);
        if !self.test_feedback_rendered.is_empty() {
            out.push_str("\n\n## Test feedback\n");
            out.push_str(&self.test_feedback_rendered);
        }
        for (path, content) in &self.selected_file_contents {
            out.push_str(&format!("\n\n## File: {path}\n"));
            out.push_str(content);
        }
        if let Some(log) = &self.build_log_excerpt {
            out.push_str("\n\n## Build log\n");
            out.push_str(log);
        }
        out
    }
}

fn char_len(s: &str) -> usize {
    s.chars().count()
}

fn char_prefix(s: &str, n: usize) -> &str {
    match s.char_indices().nth(n) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

fn char_suffix(s: &str, n: usize) -> &str {
    let len = char_len(s);
    if n >= len {
        return s;
    }
    let (i, _) = s.char_indices().nth(len - n).expect("in range");
    &s[i..]
}

/// Fits one item into `remaining` characters, keeping its head. Returns
/// `None` when not even one character plus the marker line fits.
fn fit_head(content: &str, remaining: usize) -> Option<(String, bool)> {
    if char_len(content) <= remaining {
        return Some((content.to_string(), false));
    }
    let keep = remaining.checked_sub(char_len(TRUNCATION_MARKER) + 1).filter(|k| *k > 0)?;
    Some((format!("{}\n{TRUNCATION_MARKER}", char_prefix(content, keep)), true))
}

/// Build-log variant: starts from the last [`BUILD_LOG_TAIL_LINES`] lines
/// and, if that still does not fit, drops characters from the front.
fn fit_build_log(log: &str, remaining: usize) -> Option<(String, bool)> {
    let lines: Vec<&str> = log.lines().collect();
    let cut_lines = lines.len() > BUILD_LOG_TAIL_LINES;
    if !cut_lines && char_len(log) <= remaining {
        return Some((log.to_string(), false));
    }
    let excerpt =
        if cut_lines { lines[lines.len() - BUILD_LOG_TAIL_LINES..].join("\n") } else { log.to_string() };
    let keep = remaining.checked_sub(char_len(TRUNCATION_MARKER) + 1).filter(|k| *k > 0)?;
    Some((format!("{}\n{TRUNCATION_MARKER}", char_suffix(&excerpt, keep)), true))
}

/// Last [`BUILD_LOG_TAIL_LINES`] lines of a build log, with the marker line
/// when earlier lines were dropped.
pub fn build_log_tail(log: &str) -> String {
    fit_build_log(log, usize::MAX).expect("unbounded budget").0
}

/// Assembles the grounding context under a character budget.
///
/// Priority when the budget binds: problem statement (never truncated),
/// rendered test feedback, selected files in the given order, build log
/// excerpt. Items are taken greedily; the first item that does not fit
/// whole is truncated to the remaining budget (or dropped if nothing useful
/// fits) and every lower-priority item is left out.
pub fn assemble_context(
    fixture: &ExerciseFixture,
    selected: &[String],
    include_build_log: bool,
    budget: usize,
) -> Result<ContextBundle, ContextError> {
    for path in selected {
        if !fixture.repository.contains(path) {
            return Err(ContextError::UnknownPath(path.clone()));
        }
    }
    let statement_len = char_len(&fixture.problem_statement);
    if statement_len > budget {
        return Err(ContextError::BudgetTooSmall { budget, needed: statement_len });
    }

    let mut remaining = budget - statement_len;
    let mut total = statement_len;
    let mut exhausted = false;

    let mut take = |fitted: &dyn Fn(usize) -> Option<(String, bool)>| -> Option<String> {
        if exhausted {
            return None;
        }
        match fitted(remaining) {
            Some((text, truncated)) => {
                let n = char_len(&text);
                remaining -= n;
                total += n;
                if truncated {
                    exhausted = true;
                }
                Some(text)
            }
            None => {
                exhausted = true;
                None
            }
        }
    };

    let feedback = fixture.test_feedback.as_deref().map(render_test_feedback).unwrap_or_default();
    let test_feedback_rendered = take(&|r| fit_head(&feedback, r)).unwrap_or_default();

    let mut selected_file_contents = Vec::new();
    for path in selected {
        let content = &fixture.repository.files[path];
        match take(&|r| fit_head(content, r)) {
            Some(text) => selected_file_contents.push((path.clone(), text)),
            None => break,
        }
    }

    let build_log_excerpt = match (&fixture.build_log, include_build_log) {
        (Some(log), true) => take(&|r| fit_build_log(log, r)),
        _ => None,
    };

    Ok(ContextBundle {
        problem_statement: fixture.problem_statement.clone(),
        selected_file_contents,
        test_feedback_rendered,
        build_log_excerpt,
        total_chars: total,
    })
}
