// Scores questions for relevance and shows which ones the gate rejects.

use std::error::Error;
use std::sync::Arc;

use socratic_tutor::context::load_fixture;
use socratic_tutor::guardrails::PromptTemplate;
use socratic_tutor::llm::{MockBackend, MockEntry, MockScript, StepTag};
use socratic_tutor::pipeline::{gate, parse_relevance, Gate, Pipeline, PipelineConfig, RelevanceScore};
use socratic_tutor::Session;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    for completion in ["8", "Relevance: 3/10", "I'd say 10.", "no idea"] {
        match parse_relevance(completion) {
            Some(value) => {
                let score = RelevanceScore { value, raw_completion: completion.into() };
                let verdict = if gate(&score, 5) == Gate::Reject { "reject" } else { "proceed" };
                println!("{completion:>18} -> {value:>2} {verdict}");
            }
            None => println!("{completion:>18} -> unparseable, retried then fail-open"),
        }
    }

    let fixture = load_fixture(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/bubblesort"))?;
    let backend = MockBackend::new(MockScript::new(vec![MockEntry::new(StepTag::Relevance, "2")]));
    let pipeline = Pipeline::new(Arc::new(backend), PromptTemplate::default(), PipelineConfig::default());
    let turn =
        pipeline.handle_message(&Session::new("bubblesort", "demo"), &fixture, "Any good pizza places?")?;
    assert!(turn.trace.gated);
    assert_eq!(turn.trace.llm_calls.len(), 1);
    println!("\noff-topic reply: {}", turn.reply);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
