//! Command-line entry points: `serve`, `ask`, `replay` and `eval-guardrails`.
//!
//! Exit codes:
//!
//! | code | meaning                                          |
//! |------|--------------------------------------------------|
//! | 0    | answered / replay matched / evaluation printed   |
//! | 1    | backend unavailable, or replay diverged          |
//! | 2    | bad flags, config, fixture or input files        |
//! | 3    | rejected as off-topic                            |
//! | 4    | fallback after exhausting refinements            |

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::config::{ConfigError, Settings};
use crate::context::load_fixture;
use crate::domain::{Outcome, PipelineTrace, Role, Session};
use crate::guardrails::{static_scan, ScanConfig, Violation};
use crate::llm::{load_mock_script, LlmBackend, MockBackend};
use crate::pipeline::Pipeline;
use crate::service::{enforce_boundary, FixtureRegistry, TutorService};
use crate::store::Store;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_REJECTED: i32 = 3;
pub const EXIT_FALLBACK: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "socratic-tutor", version, about = "Hint-only tutoring for programming exercises")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP API until interrupted.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Answer one question against a fixture.
    Ask {
        #[arg(long)]
        fixture: PathBuf,
        #[arg(long)]
        question: String,
        /// JSON array of `{"role", "content"}` earlier messages.
        #[arg(long)]
        history: Option<PathBuf>,
        /// Mock script to use instead of the configured backend.
        #[arg(long)]
        mock: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Re-run a recorded transcript and compare replies.
    Replay {
        #[arg(long)]
        transcript: PathBuf,
        #[arg(long)]
        fixture: PathBuf,
        #[arg(long)]
        mock: PathBuf,
        /// Store directory receiving the session and its traces.
        #[arg(long, default_value = "replay-out")]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Scan every `.txt` draft in a directory and print CSV counts.
    EvalGuardrails {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

/// One recorded exchange of a transcript file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptTurn {
    pub student: String,
    pub expected_reply: String,
}

#[derive(Debug, Clone, Deserialize)]
struct HistoryEntry {
    role: Role,
    content: String,
}

#[derive(Debug)]
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ =
                if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = match cli.command {
        Command::Serve { config } => serve(config.as_deref(), err),
        Command::Ask { fixture, question, history, mock, config } => {
            ask(&fixture, &question, history.as_deref(), mock.as_deref(), config.as_deref(), out)
        }
        Command::Replay { transcript, fixture, mock, out: out_dir, config } => {
            replay(&transcript, &fixture, &mock, &out_dir, config.as_deref(), out, err)
        }
        Command::EvalGuardrails { corpus, config } => eval_guardrails(&corpus, config.as_deref(), out),
    };
    match result {
        Ok(code) => code,
        Err(Failure(message)) => {
            let _ = writeln!(err, "error: {message}");
            EXIT_USAGE
        }
    }
}

fn pipeline_with(settings: &Settings, mock: Option<&Path>) -> Result<Pipeline, ConfigError> {
    let backend: Arc<dyn LlmBackend> = match mock {
        Some(path) => Arc::new(MockBackend::new(load_mock_script(path)?)),
        None => settings.backend()?,
    };
    Ok(Pipeline::new(backend, settings.template()?, settings.pipeline_config()))
}

fn serve(config: Option<&Path>, err: &mut dyn Write) -> Result<i32, Failure> {
    let settings = Settings::load(config)?;
    let pipeline = settings.pipeline()?;
    let store = Store::open(&settings.store_dir)?;
    let service = Arc::new(TutorService::new(FixtureRegistry::new(&settings.fixtures_dir), pipeline, store));
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    runtime
        .block_on(async {
            let listener = tokio::net::TcpListener::bind(settings.bind_addr).await?;
            tracing::info!(addr = %listener.local_addr()?, "listening");
            let shutdown = async {
                let _ = tokio::signal::ctrl_c().await;
                tracing::info!("shutting down");
            };
            crate::server::serve(listener, service, settings.cors_origin.clone(), shutdown).await
        })
        .map_err(|e| {
            let _ = writeln!(err, "server error: {e}");
            Failure(e.to_string())
        })?;
    Ok(EXIT_OK)
}

fn exit_code(outcome: Outcome) -> i32 {
    match outcome {
        Outcome::Answered => EXIT_OK,
        Outcome::RejectedOffTopic => EXIT_REJECTED,
        Outcome::Fallback => EXIT_FALLBACK,
        Outcome::Unavailable => EXIT_FAILURE,
    }
}

fn outcome_name(outcome: Outcome) -> String {
    serde_json::to_value(outcome).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

/// Human-readable digest of a trace, one `key: value` per line.
pub fn trace_summary(trace: &PipelineTrace) -> String {
    let score = trace.relevance_score.map_or("-".to_string(), |s| s.to_string());
    let levels: Vec<String> = trace.drafts.iter().map(|d| d.assistance_level.to_string()).collect();
    let mut s = format!(
        "outcome: {}\nrelevance_score: {}\nselected_files: {}\nbuild_log_requested: {}\ndrafts: {} [{}]\nrefinements: {}\nllm_calls: {}\n",
        outcome_name(trace.outcome),
        score,
        if trace.selected_files.is_empty() { "-".to_string() } else { trace.selected_files.join(", ") },
        trace.build_log_requested,
        trace.drafts.len(),
        levels.join(", "),
        trace.refinement_count,
        trace.llm_calls.len(),
    );
    for w in &trace.warnings {
        s.push_str(&format!("warning: {w}\n"));
    }
    if let Some(e) = &trace.error {
        s.push_str(&format!("error: {e}\n"));
    }
    s
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn ask(
    fixture: &Path,
    question: &str,
    history: Option<&Path>,
    mock: Option<&Path>,
    config: Option<&Path>,
    out: &mut dyn Write,
) -> Result<i32, Failure> {
    let settings = Settings::load(config)?;
    let fixture = load_fixture(fixture)?;
    let pipeline = pipeline_with(&settings, mock)?;
    let mut session = Session::with_id("ask", fixture.exercise_id.clone(), "cli");
    if let Some(path) = history {
        let entries: Vec<HistoryEntry> = read_json(path)?;
        for e in entries {
            session.append_message(e.role, e.content)?;
        }
    }
    session.clone().append_message(Role::Student, question)?;
    let turn = pipeline.handle_message(&session, &fixture, question)?;
    let (reply, trace) = enforce_boundary(turn, &pipeline.config().scan);
    writeln!(out, "{reply}\n\n--- trace ---")?;
    write!(out, "{}", trace_summary(&trace))?;
    Ok(exit_code(trace.outcome))
}

/// Session id used for a transcript's replay: `replay-<file stem>`.
pub fn replay_session_id(transcript: &Path) -> String {
    let stem = transcript.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let clean: String = stem
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_') { c } else { '_' })
        .collect();
    format!("replay-{clean}")
}

fn replay(
    transcript: &Path,
    fixture: &Path,
    mock: &Path,
    out_dir: &Path,
    config: Option<&Path>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, Failure> {
    let settings = Settings::load(config)?;
    let turns: Vec<TranscriptTurn> = read_json(transcript)?;
    let fixture = load_fixture(fixture)?;
    let pipeline = pipeline_with(&settings, Some(mock))?;
    let store = Store::open(out_dir)?;
    let session_id = replay_session_id(transcript);
    let mut session = Session::with_id(session_id.clone(), fixture.exercise_id.clone(), "replay");

    let mut diverged = 0usize;
    for (i, t) in turns.iter().enumerate() {
        let turn = pipeline.handle_message(&session, &fixture, &t.student)?;
        let (reply, trace) = enforce_boundary(turn, &pipeline.config().scan);
        store.save_trace(&session_id, &trace)?;
        let status = if reply == t.expected_reply { "ok" } else { "DIVERGED" };
        writeln!(out, "turn {}: {} ({})", i + 1, status, outcome_name(trace.outcome))?;
        if reply != t.expected_reply {
            diverged += 1;
            writeln!(err, "turn {}: expected {:?}\n        got      {:?}", i + 1, t.expected_reply, reply)?;
        }
        session.append_message(Role::Student, t.student.as_str())?;
        session.append_message(Role::Tutor, reply)?;
    }
    store.save_session(&session)?;
    writeln!(
        out,
        "{} turn(s), {} diverged; traces in {}",
        turns.len(),
        diverged,
        store.base_dir().join("traces").join(&session_id).display()
    )?;
    Ok(if diverged == 0 { EXIT_OK } else { EXIT_FAILURE })
}

/// Violation counts over a set of drafts.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GuardrailReport {
    pub counts: [usize; 4],
    pub total: usize,
    pub flagged: usize,
}

impl GuardrailReport {
    pub fn from_drafts<'a>(drafts: impl IntoIterator<Item = &'a str>, scan: &ScanConfig) -> Self {
        let mut r = GuardrailReport::default();
        for d in drafts {
            let verdict = static_scan(d, scan);
            r.total += 1;
            if !verdict.passed {
                r.flagged += 1;
            }
            for (i, v) in Violation::ALL.iter().enumerate() {
                if verdict.violations.contains(v) {
                    r.counts[i] += 1;
                }
            }
        }
        r
    }

    pub fn leak_rate(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.flagged as f64 / self.total as f64
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("violation,count\n");
        for (i, v) in Violation::ALL.iter().enumerate() {
            s.push_str(&format!("{},{}\n", v.as_str(), self.counts[i]));
        }
        s.push_str(&format!("total_drafts,{}\n", self.total));
        s.push_str(&format!("flagged_drafts,{}\n", self.flagged));
        s.push_str(&format!("leak_rate,{:.4}\n", self.leak_rate()));
        s
    }
}

fn eval_guardrails(corpus: &Path, config: Option<&Path>, out: &mut dyn Write) -> Result<i32, Failure> {
    let settings = Settings::load(config)?;
    let scan = settings.pipeline_config().scan;
    let mut paths: Vec<PathBuf> = std::fs::read_dir(corpus)
        .map_err(|e| Failure(format!("{}: {e}", corpus.display())))?
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "txt"))
        .collect();
    paths.sort();
    let mut drafts = Vec::with_capacity(paths.len());
    for p in &paths {
        drafts.push(std::fs::read_to_string(p).map_err(|e| Failure(format!("{}: {e}", p.display())))?);
    }
    let report = GuardrailReport::from_drafts(drafts.iter().map(String::as_str), &scan);
    out.write_all(report.to_csv().as_bytes())?;
    Ok(EXIT_OK)
}
