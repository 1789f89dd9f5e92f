//! Calibrated-assistance guardrails.
//!
//! * [`template`] renders the "excellent tutor" system prompt and the other
//!   step prompts from plain-text layouts.
//! * [`scan`] is the deterministic leak scanner run on every draft.
//! * [`refine`] owns the self-check loop that lowers the assistance level
//!   until a draft passes or the refinement budget runs out.

pub mod refine;
pub mod scan;
pub mod template;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use refine::{
    llm_self_check, parse_self_check, refine_until_safe, RefineError, Refined, SelfCheck, FALLBACK_REPLY,
};
pub use scan::{static_scan, ScanConfig, DEFAULT_CODE_KEYWORDS};
pub use template::{FewShot, Layout, PromptTemplate, TemplateError, REFUSAL_ANSWER, SOLUTION_REQUEST};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Violation {
    CodeBlock,
    PseudocodeOrSteps,
    SolutionReveal,
    EmptyOrGarbled,
}

impl Violation {
    pub const ALL: [Violation; 4] = [
        Violation::CodeBlock,
        Violation::PseudocodeOrSteps,
        Violation::SolutionReveal,
        Violation::EmptyOrGarbled,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Violation::CodeBlock => "code_block",
            Violation::PseudocodeOrSteps => "pseudocode_or_steps",
            Violation::SolutionReveal => "solution_reveal",
            Violation::EmptyOrGarbled => "empty_or_garbled",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictSource {
    StaticScan,
    LlmSelfCheck,
    Both,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuardrailVerdict {
    pub passed: bool,
    pub violations: BTreeSet<Violation>,
    pub source: VerdictSource,
}

impl GuardrailVerdict {
    pub fn new(violations: BTreeSet<Violation>, source: VerdictSource) -> Self {
        GuardrailVerdict { passed: violations.is_empty(), violations, source }
    }

    pub fn pass(source: VerdictSource) -> Self {
        Self::new(BTreeSet::new(), source)
    }

    pub fn fail(violation: Violation, source: VerdictSource) -> Self {
        Self::new(BTreeSet::from([violation]), source)
    }
}
