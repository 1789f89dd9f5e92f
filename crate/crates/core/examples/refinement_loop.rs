// Drives the refinement loop with canned drafts and verdicts.

use std::error::Error;

use socratic_tutor::guardrails::{parse_self_check, refine_until_safe, ScanConfig};
use socratic_tutor::llm::LlmError;
use socratic_tutor::{AssistanceLevel, Outcome};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let drafts = [
        "Replace the bound:\n```java\ni < values.length - 1\n```",
        "Stop the loop one element earlier than the array length.",
        "Which element would the last comparison read?",
    ];
    let verdicts = ["FAIL: gives the fix away", "PASS"];
    let (mut g, mut c) = (0, 0);
    let refined = refine_until_safe(
        |level| {
            println!("generate at {level}");
            g += 1;
            Ok::<_, LlmError>(drafts[g - 1].to_string())
        },
        |_| {
            c += 1;
            Ok(parse_self_check(verdicts[c - 1]))
        },
        &ScanConfig::default(),
        AssistanceLevel::L3,
        3,
    )
    .map_err(|e| e.source)?;

    for d in &refined.drafts {
        println!("{} passed={} {:?}", d.assistance_level, d.verdict.passed, d.verdict.violations);
    }
    assert_eq!(refined.outcome, Outcome::Answered);
    println!("final: {}", refined.final_text);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
