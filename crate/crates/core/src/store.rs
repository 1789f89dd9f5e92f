//! Flat-file storage for sessions and traces.
//!
//! ```text
//! <base>/sessions/<session_id>.json
//! <base>/traces/<session_id>/<sequence>.json
//! ```
//!
//! Every write goes to a temporary file in the target directory and is then
//! renamed over the destination, so readers only ever see complete records.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use chrono::{DateTime, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tempfile::NamedTempFile;
use thiserror::Error;

use crate::domain::{PipelineTrace, Session, SessionState};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("not found: {0}")]
    NotFound(String),
    #[error("invalid record id {0:?}")]
    InvalidId(String),
    #[error("i/o error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt record {path}: {message}")]
    CorruptRecord { path: String, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.display().to_string(), source }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub session_id: String,
    pub exercise_id: String,
    pub student_id: String,
    pub created_at: DateTime<Utc>,
    pub message_count: usize,
    pub state: SessionState,
}

/// A fully written temporary file waiting to be renamed into place.
/// Dropping it without [`StagedWrite::commit`] discards the write.
pub struct StagedWrite {
    temp: NamedTempFile,
    target: PathBuf,
}

impl StagedWrite {
    pub fn stage(target: &Path, bytes: &[u8]) -> Result<Self, StoreError> {
        let dir = target.parent().expect("record paths have a parent");
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let mut temp =
            tempfile::Builder::new().prefix(".tmp-").suffix(".part").tempfile_in(dir).map_err(io_err(dir))?;
        temp.write_all(bytes).map_err(io_err(target))?;
        temp.as_file().sync_all().map_err(io_err(target))?;
        Ok(StagedWrite { temp, target: target.to_path_buf() })
    }

    pub fn commit(self) -> Result<(), StoreError> {
        let target = self.target;
        self.temp
            .persist(&target)
            .map_err(|e| StoreError::Io { path: target.display().to_string(), source: e.error })?;
        Ok(())
    }
}

pub fn write_atomic(target: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    StagedWrite::stage(target, bytes)?.commit()
}

/// Pretty JSON with a trailing newline. Output is a pure function of the value.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("domain values serialize");
    bytes.push(b'\n');
    bytes
}

fn validate_id(id: &str) -> Result<(), StoreError> {
    let ok = !id.is_empty()
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(StoreError::InvalidId(id.to_string()))
    }
}

pub struct Store {
    base: PathBuf,
    writers: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

impl Store {
    pub fn open(base: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let base = base.into();
        for sub in ["sessions", "traces"] {
            let dir = base.join(sub);
            fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        }
        Ok(Store { base, writers: Mutex::new(HashMap::new()) })
    }

    pub fn base_dir(&self) -> &Path {
        &self.base
    }

    pub fn session_path(&self, session_id: &str) -> PathBuf {
        self.base.join("sessions").join(format!("{session_id}.json"))
    }

    pub fn trace_path(&self, session_id: &str, sequence: u64) -> PathBuf {
        self.base.join("traces").join(session_id).join(format!("{sequence}.json"))
    }

    fn writer(&self, session_id: &str) -> Arc<Mutex<()>> {
        self.writers.lock().expect("writer map").entry(session_id.to_string()).or_default().clone()
    }

    pub fn save_session(&self, session: &Session) -> Result<(), StoreError> {
        validate_id(&session.session_id)?;
        let lock = self.writer(&session.session_id);
        let _guard = lock.lock().expect("session writer");
        write_atomic(&self.session_path(&session.session_id), &to_canonical_json(session))
    }

    pub fn load_session(&self, session_id: &str) -> Result<Session, StoreError> {
        validate_id(session_id).map_err(|_| StoreError::NotFound(session_id.to_string()))?;
        read_record(&self.session_path(session_id), session_id)
    }

    pub fn save_trace(&self, session_id: &str, trace: &PipelineTrace) -> Result<(), StoreError> {
        validate_id(session_id)?;
        let lock = self.writer(session_id);
        let _guard = lock.lock().expect("session writer");
        write_atomic(&self.trace_path(session_id, trace.message_sequence), &to_canonical_json(trace))
    }

    pub fn load_trace(&self, session_id: &str, sequence: u64) -> Result<PipelineTrace, StoreError> {
        let what = format!("{session_id}/{sequence}");
        validate_id(session_id).map_err(|_| StoreError::NotFound(what.clone()))?;
        read_record(&self.trace_path(session_id, sequence), &what)
    }

    /// Summaries of all stored sessions, optionally for one student, sorted
    /// by creation time then id.
    pub fn list_sessions(&self, student_id: Option<&str>) -> Result<Vec<SessionSummary>, StoreError> {
        let dir = self.base.join("sessions");
        let mut out = Vec::new();
        for entry in fs::read_dir(&dir).map_err(io_err(&dir))? {
            let entry = entry.map_err(io_err(&dir))?;
            let name = entry.file_name().to_string_lossy().into_owned();
            let Some(id) = name.strip_suffix(".json") else { continue };
            if name.starts_with('.') {
                continue;
            }
            let session: Session = read_record(&entry.path(), id)?;
            if student_id.is_some_and(|s| s != session.student_id) {
                continue;
            }
            out.push(SessionSummary {
                message_count: session.messages.len(),
                session_id: session.session_id,
                exercise_id: session.exercise_id,
                student_id: session.student_id,
                created_at: session.created_at,
                state: session.state,
            });
        }
        out.sort_by(|a, b| a.created_at.cmp(&b.created_at).then_with(|| a.session_id.cmp(&b.session_id)));
        Ok(out)
    }
}

fn read_record<T: DeserializeOwned>(path: &Path, what: &str) -> Result<T, StoreError> {
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(StoreError::NotFound(what.to_string()))
        }
        Err(e) => return Err(io_err(path)(e)),
    };
    serde_json::from_slice(&bytes)
        .map_err(|e| StoreError::CorruptRecord { path: path.display().to_string(), message: e.to_string() })
}
