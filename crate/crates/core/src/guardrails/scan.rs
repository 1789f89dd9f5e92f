//! Static solution-leak scanner.

use std::collections::BTreeSet;

use super::{GuardrailVerdict, VerdictSource, Violation};

pub const DEFAULT_CODE_KEYWORDS: &[&str] =
    &["for", "while", "if(", "def", "class", "public", "return", "import", "#include"];

const MIN_CODE_RUN: usize = 3;
const MIN_STEP_LINES: usize = 4;
const MIN_CHARS: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanConfig {
    /// Line prefixes that mark a line as code.
    pub code_keywords: Vec<String>,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig { code_keywords: DEFAULT_CODE_KEYWORDS.iter().map(|k| k.to_string()).collect() }
    }
}

impl ScanConfig {
    /// Comma-separated keyword list, as used by the `CODE_KEYWORDS` config key.
    pub fn from_keyword_list(list: &str) -> Self {
        ScanConfig {
            code_keywords: list
                .split(',')
                .map(str::trim)
                .filter(|k| !k.is_empty())
                .map(str::to_string)
                .collect(),
        }
    }

    fn starts_with_keyword(&self, line: &str) -> bool {
        self.code_keywords.iter().any(|kw| {
            let Some(rest) = line.strip_prefix(kw.as_str()) else { return false };
            // Keywords ending in a word character need a boundary: `for`
            // matches `for (` but not `format`.
            let needs_boundary = kw.chars().last().is_some_and(|c| c.is_alphanumeric() || c == '_');
            !needs_boundary || rest.chars().next().is_none_or(|c| !(c.is_alphanumeric() || c == '_'))
        })
    }

    fn is_code_line(&self, line: &str) -> bool {
        let t = line.trim();
        !t.is_empty()
            && (t.ends_with(';') || t.ends_with('{') || t.ends_with('}') || self.starts_with_keyword(t))
    }
}

fn has_fence(draft: &str) -> bool {
    draft.contains("```") || draft.lines().any(|l| l.trim_start().starts_with("~~~"))
}

fn is_step_line(line: &str) -> bool {
    let t = line.trim_start();
    let digits = t.chars().take_while(char::is_ascii_digit).count();
    if digits > 0 {
        let rest = &t[digits..];
        if let Some(after) = rest.strip_prefix('.') {
            return after.is_empty() || after.starts_with(char::is_whitespace);
        }
        return false;
    }
    let lower = t.to_ascii_lowercase();
    lower
        .strip_prefix("step")
        .map(str::trim_start)
        .is_some_and(|r| r.starts_with(|c: char| c.is_ascii_digit()))
}

/// Scans a draft for leaked code, step-by-step instructions, or junk.
///
/// Blank lines neither extend nor break a run of code lines.
pub fn static_scan(draft: &str, config: &ScanConfig) -> GuardrailVerdict {
    let mut violations = BTreeSet::new();

    if draft.trim().chars().count() < MIN_CHARS {
        violations.insert(Violation::EmptyOrGarbled);
    }

    let mut run = 0usize;
    let mut longest = 0usize;
    for line in draft.lines().filter(|l| !l.trim().is_empty()) {
        if config.is_code_line(line) {
            run += 1;
            longest = longest.max(run);
        } else {
            run = 0;
        }
    }
    if has_fence(draft) || longest >= MIN_CODE_RUN {
        violations.insert(Violation::CodeBlock);
    }

    if draft.lines().filter(|l| is_step_line(l)).count() >= MIN_STEP_LINES {
        violations.insert(Violation::PseudocodeOrSteps);
    }

    GuardrailVerdict::new(violations, VerdictSource::StaticScan)
}
