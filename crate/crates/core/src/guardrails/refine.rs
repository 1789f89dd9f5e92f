//! Post-generation self-check and the refinement loop.

use crate::domain::{AssistanceLevel, Draft, Outcome};
use crate::llm::{tagged_system, ChatPrompt, LlmBackend, LlmError, StepTag};

use super::scan::{static_scan, ScanConfig};
use super::template::{Layout, PromptTemplate};
use super::{GuardrailVerdict, VerdictSource, Violation};

pub const FALLBACK_REPLY: &str = "I can't phrase a good hint right now without giving too much away. Try re-reading the problem statement, and ask me a more specific question or contact a human tutor.";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelfCheck {
    pub verdict: GuardrailVerdict,
    pub warning: Option<String>,
}

/// Reads the verdict from the first line of a self-check completion.
/// Anything other than a leading PASS or FAIL token fails closed.
pub fn parse_self_check(completion: &str) -> SelfCheck {
    let first_line = completion.trim_start().lines().next().unwrap_or("").trim();
    let token: String = first_line.chars().take_while(|c| c.is_ascii_alphabetic()).collect();
    match token.to_ascii_uppercase().as_str() {
        "PASS" => SelfCheck { verdict: GuardrailVerdict::pass(VerdictSource::LlmSelfCheck), warning: None },
        "FAIL" => SelfCheck {
            verdict: GuardrailVerdict::fail(Violation::SolutionReveal, VerdictSource::LlmSelfCheck),
            warning: None,
        },
        _ => SelfCheck {
            verdict: GuardrailVerdict::fail(Violation::SolutionReveal, VerdictSource::LlmSelfCheck),
            warning: Some(format!("unparseable self-check verdict {first_line:?}; treated as FAIL")),
        },
    }
}

pub fn self_check_prompt(template: &PromptTemplate, draft: &str) -> Result<ChatPrompt, LlmError> {
    let system = template
        .render(Layout::SelfCheckSystem, &[("role_preamble", &template.role_preamble)])
        .map_err(|e| LlmError::InvalidPrompt(e.to_string()))?;
    let user = template
        .render(Layout::SelfCheckUser, &[("draft", draft)])
        .map_err(|e| LlmError::InvalidPrompt(e.to_string()))?;
    ChatPrompt::new(StepTag::SelfCheck, tagged_system(StepTag::SelfCheck, &system), user)
}

/// Asks the model whether `draft` follows the tutor rules.
pub fn llm_self_check(
    backend: &dyn LlmBackend,
    template: &PromptTemplate,
    draft: &str,
) -> Result<SelfCheck, LlmError> {
    let exchange = backend.complete(&self_check_prompt(template, draft)?)?;
    Ok(parse_self_check(&exchange.completion))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Refined {
    pub final_text: String,
    pub drafts: Vec<Draft>,
    pub outcome: Outcome,
    pub warnings: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
#[error("refinement aborted after {} draft(s): {source}", drafts.len())]
pub struct RefineError {
    #[source]
    pub source: LlmError,
    pub drafts: Vec<Draft>,
    pub warnings: Vec<String>,
}

/// Generates drafts until one passes both the static scan and the model
/// self-check, lowering the assistance level after every failure.
///
/// At most `max_refinements + 1` drafts are generated. The model check only
/// runs on drafts that pass the static scan. When every draft fails, the
/// fixed [`FALLBACK_REPLY`] is returned with [`Outcome::Fallback`].
pub fn refine_until_safe<G, C>(
    mut generate: G,
    mut llm_check: C,
    scan: &ScanConfig,
    initial_level: AssistanceLevel,
    max_refinements: u32,
) -> Result<Refined, RefineError>
where
    G: FnMut(AssistanceLevel) -> Result<String, LlmError>,
    C: FnMut(&str) -> Result<SelfCheck, LlmError>,
{
    let mut drafts: Vec<Draft> = Vec::new();
    let mut warnings = Vec::new();
    let mut level = initial_level;

    for attempt in 0..=max_refinements {
        if attempt > 0 {
            level = level.lower();
        }
        let text = match generate(level) {
            Ok(t) => t,
            Err(source) => return Err(RefineError { source, drafts, warnings }),
        };
        let static_verdict = static_scan(&text, scan);
        let verdict = if static_verdict.passed {
            match llm_check(&text) {
                Ok(check) => {
                    warnings.extend(check.warning);
                    GuardrailVerdict::new(check.verdict.violations, VerdictSource::Both)
                }
                Err(source) => {
                    return Err(RefineError { source, drafts, warnings });
                }
            }
        } else {
            static_verdict
        };
        let passed = verdict.passed;
        drafts.push(Draft { text: text.clone(), verdict, assistance_level: level });
        if passed {
            return Ok(Refined { final_text: text, drafts, outcome: Outcome::Answered, warnings });
        }
    }

    Ok(Refined { final_text: FALLBACK_REPLY.to_string(), drafts, outcome: Outcome::Fallback, warnings })
}
