// Serves the HTTP API on a free port and talks to it over real HTTP.

use std::error::Error;
use std::sync::Arc;

use serde_json::{json, Value};
use socratic_tutor::guardrails::PromptTemplate;
use socratic_tutor::llm::{MockBackend, MockEntry, MockScript, StepTag};
use socratic_tutor::service::{FixtureRegistry, TutorService};
use socratic_tutor::store::Store;
use socratic_tutor::{Pipeline, PipelineConfig};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let store_dir = tempfile::tempdir()?;
    let script = MockScript::new(vec![
        MockEntry::new(StepTag::Relevance, "7"),
        MockEntry::new(StepTag::FileSelection, "src/main/java/sort/BubbleSort.java"),
        MockEntry::new(StepTag::Generation, "How many neighbouring pairs does an array of length n have?"),
        MockEntry::new(StepTag::SelfCheck, "PASS"),
    ]);
    let pipeline = Pipeline::new(
        Arc::new(MockBackend::new(script)),
        PromptTemplate::default(),
        PipelineConfig::default(),
    );
    let service = Arc::new(TutorService::new(
        FixtureRegistry::new(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures")),
        pipeline,
        Store::open(store_dir.path())?,
    ));

    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    let listener = rt.block_on(tokio::net::TcpListener::bind("127.0.0.1:0"))?;
    let base = format!("http://{}", listener.local_addr()?);
    let (stop_tx, stop_rx) = std::sync::mpsc::channel::<()>();
    let server = rt.spawn(socratic_tutor::server::serve(listener, service, None, async move {
        let _ = tokio::task::spawn_blocking(move || stop_rx.recv()).await;
    }));

    let client = reqwest::blocking::Client::new();
    let exercises: Value = client.get(format!("{base}/api/exercises")).send()?.json()?;
    println!("exercises: {exercises}");
    let session: Value = client
        .post(format!("{base}/api/sessions"))
        .json(&json!({"exercise_id": "bubblesort", "student_id": "s1"}))
        .send()?
        .json()?;
    let id = session["session_id"].as_str().ok_or("no session id")?;
    let reply = client
        .post(format!("{base}/api/sessions/{id}/messages"))
        .json(&json!({"content": "how do I start?"}))
        .send()?;
    println!("POST message -> {}", reply.status());
    let reply: Value = reply.json()?;
    println!("{} says: {}", reply["outcome"], reply["tutor_message"]["content"]);
    let missing = client.get(format!("{base}/api/sessions/nope")).send()?;
    println!("GET unknown session -> {} {}", missing.status(), missing.text()?);

    stop_tx.send(())?;
    rt.block_on(server)??;
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
