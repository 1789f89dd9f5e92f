// One on-topic question through all four steps, printing the trace.

use std::error::Error;
use std::sync::Arc;

use socratic_tutor::context::load_fixture;
use socratic_tutor::guardrails::PromptTemplate;
use socratic_tutor::llm::{MockBackend, MockEntry, MockScript, StepTag};
use socratic_tutor::{Outcome, Pipeline, PipelineConfig, Session};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let fixture = load_fixture(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/bubblesort"))?;
    let hint =
        "Look at the index your comparison reads when i is the last position. Does that element exist?";
    let script = MockScript::new(vec![
        MockEntry::new(StepTag::Relevance, "9").expecting("Bubble Sort"),
        MockEntry::new(StepTag::FileSelection, "src/main/java/sort/BubbleSort.java\nBUILD_LOG"),
        MockEntry::new(StepTag::Generation, hint).expecting("Index 1 out of bounds"),
        MockEntry::new(StepTag::SelfCheck, "PASS"),
    ]);
    let pipeline = Pipeline::new(
        Arc::new(MockBackend::new(script)),
        PromptTemplate::default(),
        PipelineConfig::default(),
    );
    let mut session = Session::new("bubblesort", "demo");
    let question = "Why does sortsSingleElement throw?";
    let turn = pipeline.handle_message(&session, &fixture, question)?;
    assert_eq!(turn.trace.outcome, Outcome::Answered);

    session.append_message(socratic_tutor::Role::Student, question)?;
    session.append_message(socratic_tutor::Role::Tutor, turn.reply.as_str())?;
    println!("tutor: {}\n", turn.reply);
    println!("{}", serde_json::to_string_pretty(&turn.trace)?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
