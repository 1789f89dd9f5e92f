//! Session-level orchestration shared by the HTTP API and the CLI.
//!
//! [`TutorService`] ties the fixture registry, the pipeline and the store
//! together and serializes message processing per session.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard, RwLock, TryLockError};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::context::{load_fixture, ContextError, ExerciseFixture};
use crate::domain::{DomainError, Message, Outcome, PipelineTrace, Role, Session};
use crate::guardrails::{static_scan, ScanConfig, FALLBACK_REPLY};
use crate::pipeline::{Pipeline, PipelineError, Turn};
use crate::store::{Store, StoreError};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown exercise {0}")]
    UnknownExercise(String),
    #[error("fixture {exercise_id} failed to load: {source}")]
    Fixture {
        exercise_id: String,
        #[source]
        source: ContextError,
    },
    #[error("session {0} not found")]
    SessionNotFound(String),
    #[error("trace {0} not found")]
    TraceNotFound(String),
    #[error("session {0} is already processing a message")]
    Busy(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Store(StoreError),
    #[error(transparent)]
    Pipeline(PipelineError),
}

impl From<PipelineError> for ServiceError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::EmptyContent => ServiceError::Domain(DomainError::EmptyContent),
            PipelineError::SessionClosed => ServiceError::Domain(DomainError::SessionClosed),
            other => ServiceError::Pipeline(other),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExerciseSummary {
    pub exercise_id: String,
    pub title: String,
}

/// Fixtures under one directory, loaded on first use and then shared.
pub struct FixtureRegistry {
    root: PathBuf,
    cache: RwLock<HashMap<String, Arc<ExerciseFixture>>>,
}

fn is_plain_name(id: &str) -> bool {
    !id.is_empty()
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

impl FixtureRegistry {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        FixtureRegistry { root: root.into(), cache: RwLock::new(HashMap::new()) }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn get(&self, exercise_id: &str) -> Result<Arc<ExerciseFixture>, ServiceError> {
        if let Some(f) = self.cache.read().expect("fixture cache").get(exercise_id) {
            return Ok(f.clone());
        }
        if !is_plain_name(exercise_id) || !self.root.join(exercise_id).is_dir() {
            return Err(ServiceError::UnknownExercise(exercise_id.to_string()));
        }
        let fixture = load_fixture(self.root.join(exercise_id))
            .map_err(|source| ServiceError::Fixture { exercise_id: exercise_id.to_string(), source })?;
        let fixture = Arc::new(fixture);
        self.cache.write().expect("fixture cache").insert(exercise_id.to_string(), fixture.clone());
        Ok(fixture)
    }

    /// Every subdirectory holding a loadable fixture, sorted by id.
    pub fn list(&self) -> Vec<ExerciseSummary> {
        let Ok(entries) = std::fs::read_dir(&self.root) else { return Vec::new() };
        let mut ids: Vec<String> = entries
            .filter_map(Result::ok)
            .filter(|e| e.path().join("problem.md").is_file())
            .map(|e| e.file_name().to_string_lossy().into_owned())
            .filter(|id| is_plain_name(id))
            .collect();
        ids.sort();
        ids.into_iter()
            .filter_map(|id| {
                let fixture = self.get(&id).ok()?;
                Some(ExerciseSummary { title: fixture.title(), exercise_id: id })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PostedReply {
    pub tutor_message: Message,
    pub outcome: Outcome,
    pub trace: PipelineTrace,
}

/// Last check before a reply leaves the service: an answered reply that
/// fails the static scan is swapped for the fallback.
pub fn enforce_boundary(turn: Turn, scan: &ScanConfig) -> (String, PipelineTrace) {
    let Turn { mut reply, mut trace } = turn;
    if trace.outcome == Outcome::Answered && !static_scan(&reply, scan).passed {
        tracing::error!("answered reply failed the static scan; replacing with fallback");
        trace.warnings.push("answered reply failed boundary scan; replaced with fallback".into());
        trace.outcome = Outcome::Fallback;
        reply = FALLBACK_REPLY.to_string();
    }
    (reply, trace)
}

pub struct TutorService {
    fixtures: FixtureRegistry,
    pipeline: Pipeline,
    store: Store,
    in_flight: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

impl TutorService {
    pub fn new(fixtures: FixtureRegistry, pipeline: Pipeline, store: Store) -> Self {
        TutorService { fixtures, pipeline, store, in_flight: Mutex::new(HashMap::new()) }
    }

    pub fn fixtures(&self) -> &FixtureRegistry {
        &self.fixtures
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn pipeline(&self) -> &Pipeline {
        &self.pipeline
    }

    pub fn list_exercises(&self) -> Vec<ExerciseSummary> {
        self.fixtures.list()
    }

    pub fn create_session(&self, exercise_id: &str, student_id: &str) -> Result<Session, ServiceError> {
        self.fixtures.get(exercise_id)?;
        let session = Session::new(exercise_id, student_id);
        self.store.save_session(&session).map_err(ServiceError::Store)?;
        Ok(session)
    }

    pub fn get_session(&self, session_id: &str) -> Result<Session, ServiceError> {
        self.store.load_session(session_id).map_err(|e| match e {
            StoreError::NotFound(_) => ServiceError::SessionNotFound(session_id.to_string()),
            other => ServiceError::Store(other),
        })
    }

    pub fn get_trace(&self, session_id: &str, sequence: u64) -> Result<PipelineTrace, ServiceError> {
        self.get_session(session_id)?;
        self.store.load_trace(session_id, sequence).map_err(|e| match e {
            StoreError::NotFound(what) => ServiceError::TraceNotFound(what),
            other => ServiceError::Store(other),
        })
    }

    fn session_lock(&self, session_id: &str) -> Arc<Mutex<()>> {
        self.in_flight.lock().expect("in-flight map").entry(session_id.to_string()).or_default().clone()
    }

    /// Processes a message unless the session is already busy, in which
    /// case [`ServiceError::Busy`] is returned immediately.
    pub fn try_post_message(&self, session_id: &str, content: &str) -> Result<PostedReply, ServiceError> {
        let lock = self.session_lock(session_id);
        let guard = match lock.try_lock() {
            Ok(g) => g,
            Err(TryLockError::WouldBlock) => return Err(ServiceError::Busy(session_id.to_string())),
            Err(TryLockError::Poisoned(p)) => p.into_inner(),
        };
        self.post_locked(session_id, content, guard)
    }

    /// Processes a message, waiting for any in-flight message on the same
    /// session to finish first.
    pub fn post_message(&self, session_id: &str, content: &str) -> Result<PostedReply, ServiceError> {
        let lock = self.session_lock(session_id);
        let guard = lock.lock().unwrap_or_else(|p| p.into_inner());
        self.post_locked(session_id, content, guard)
    }

    fn post_locked(
        &self,
        session_id: &str,
        content: &str,
        _guard: MutexGuard<'_, ()>,
    ) -> Result<PostedReply, ServiceError> {
        let mut session = self.get_session(session_id)?;
        // Validate against the session before spending any model calls.
        session.clone().append_message(Role::Student, content)?;
        let fixture = self.fixtures.get(&session.exercise_id)?;

        let turn = self.pipeline.handle_message(&session, &fixture, content)?;
        let (reply, trace) = enforce_boundary(turn, &self.pipeline.config().scan);

        session.append_message(Role::Student, content)?;
        let tutor_message = session.append_message(Role::Tutor, reply)?.clone();
        self.store.save_trace(session_id, &trace).map_err(ServiceError::Store)?;
        self.store.save_session(&session).map_err(ServiceError::Store)?;
        Ok(PostedReply { tutor_message, outcome: trace.outcome, trace })
    }
}
