// Scripted mock replies, and an HTTP backend when `LLM_ENDPOINT` is set.

use std::error::Error;

use socratic_tutor::llm::{
    tagged_system, ChatPrompt, HttpBackend, HttpConfig, LlmBackend, MockBackend, MockScript, StepTag,
};

const SCRIPT: &str = r#"[
  {"expect_step": "relevance", "expect_substring": "bubble", "reply": "7"},
  {"expect_step": "self_check", "reply": "PASS"}
]"#;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let mock = MockBackend::new(MockScript::parse(SCRIPT)?);
    let prompt = ChatPrompt::new(
        StepTag::Relevance,
        tagged_system(StepTag::Relevance, "Rate the question from 1 to 10."),
        "How does bubble sort know when to stop?".into(),
    )?;
    let exchange = mock.complete(&prompt)?;
    println!("mock relevance reply: {:?} ({} left)", exchange.completion, mock.remaining());

    // A self-check entry cannot answer a relevance prompt.
    assert!(mock.complete(&prompt).is_err());

    match std::env::var("LLM_ENDPOINT") {
        Ok(endpoint) => {
            let model = std::env::var("LLM_MODEL").unwrap_or_else(|_| "gpt-3.5-turbo".into());
            let mut config = HttpConfig::new(endpoint, model);
            config.api_key = std::env::var("LLM_API_KEY").ok();
            let exchange = HttpBackend::new(config)?.complete(&prompt)?;
            println!("http reply in {} ms: {:?}", exchange.latency_ms, exchange.completion);
        }
        Err(_) => println!("LLM_ENDPOINT not set; skipping the HTTP call"),
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
