#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::mpsc::{Receiver, Sender};
use std::sync::{Arc, Mutex};

use socratic_tutor::guardrails::PromptTemplate;
use socratic_tutor::llm::{
    BackendKind, ChatPrompt, LlmBackend, LlmError, LlmExchange, MockBackend, MockEntry, MockScript, StepTag,
};
use socratic_tutor::pipeline::{Pipeline, PipelineConfig};
use socratic_tutor::service::{FixtureRegistry, TutorService};
use socratic_tutor::store::Store;

pub const HINT: &str = "What value does your loop variable have on the last comparison?";

pub fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn fixtures_dir() -> PathBuf {
    crate_dir().join("fixtures")
}

pub fn bubblesort() -> PathBuf {
    fixtures_dir().join("bubblesort")
}

pub fn golden() -> PathBuf {
    crate_dir().join("golden")
}

pub fn happy_script() -> Vec<MockEntry> {
    vec![
        MockEntry::new(StepTag::Relevance, "7"),
        MockEntry::new(StepTag::FileSelection, "src/main/java/sort/BubbleSort.java"),
        MockEntry::new(StepTag::Generation, HINT),
        MockEntry::new(StepTag::SelfCheck, "PASS"),
    ]
}

pub fn service_with(backend: Arc<dyn LlmBackend>, store_dir: &Path) -> TutorService {
    let pipeline = Pipeline::new(backend, PromptTemplate::default(), PipelineConfig::default());
    TutorService::new(FixtureRegistry::new(fixtures_dir()), pipeline, Store::open(store_dir).unwrap())
}

pub fn mock_service(entries: Vec<MockEntry>, store_dir: &Path) -> TutorService {
    service_with(Arc::new(MockBackend::new(MockScript::new(entries))), store_dir)
}

/// Backend whose every call announces itself and then waits for a release
/// signal. Replies like a relevance step scoring 2.
pub struct GateBackend {
    entered: Mutex<Sender<()>>,
    release: Mutex<Receiver<()>>,
}

impl GateBackend {
    pub fn new() -> (Self, Receiver<()>, Sender<()>) {
        let (entered_tx, entered_rx) = std::sync::mpsc::channel();
        let (release_tx, release_rx) = std::sync::mpsc::channel();
        (
            GateBackend { entered: Mutex::new(entered_tx), release: Mutex::new(release_rx) },
            entered_rx,
            release_tx,
        )
    }
}

impl LlmBackend for GateBackend {
    fn complete(&self, prompt: &ChatPrompt) -> Result<LlmExchange, LlmError> {
        self.entered.lock().unwrap().send(()).unwrap();
        self.release.lock().unwrap().recv().unwrap();
        Ok(LlmExchange {
            prompt: prompt.clone(),
            completion: "2".into(),
            latency_ms: 0,
            backend: BackendKind::Mock,
        })
    }

    fn kind(&self) -> BackendKind {
        BackendKind::Mock
    }
}

/// Backend that always fails as if the endpoint were down.
pub struct DownBackend;

impl LlmBackend for DownBackend {
    fn complete(&self, _prompt: &ChatPrompt) -> Result<LlmExchange, LlmError> {
        Err(LlmError::BackendUnavailable { attempts: 3, reason: "connection refused".into() })
    }

    fn kind(&self) -> BackendKind {
        BackendKind::Http
    }
}
pub mod gen;
