// Renders the generation system prompt at each assistance level.

use std::error::Error;

use socratic_tutor::guardrails::{Layout, PromptTemplate};
use socratic_tutor::AssistanceLevel;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let template = PromptTemplate::default();
    println!("{}\n", template.render_system_prompt(AssistanceLevel::L2));
    for level in AssistanceLevel::ALL {
        println!("{level}: {}", template.level_directive(level));
    }

    let mut custom = template.clone();
    custom.set_layout(Layout::RelevanceUser, "Question: {question}\nEarlier: {history}")?;
    // Substitution is single-pass: braces inside values stay literal.
    let text =
        custom.render(Layout::RelevanceUser, &[("question", "Why {history}?"), ("history", "(none)")])?;
    assert_eq!(text, "Question: Why {history}?\nEarlier: (none)");
    assert!(custom.set_layout(Layout::RelevanceUser, "Earlier: {history}").is_err());
    println!("\n{text}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
