//! Prompt templates.
//!
//! Every prompt the pipeline sends is rendered from a plain-text layout with
//! `{name}` placeholders. Built-in layouts can be overridden one file at a
//! time from a template directory (`TEMPLATE_DIR`), e.g.
//! `generation_system.txt` or `role_preamble.txt`.
//!
//! Substitution is single-pass: text inserted for a placeholder is never
//! scanned again, so code or JSON inside a context bundle is safe.

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

use crate::domain::AssistanceLevel;
use crate::llm::{tagged_system, StepTag};

pub const SOLUTION_REQUEST: &str = "Can you give me the complete solution to this exercise?";
pub const REFUSAL_ANSWER: &str = "Sorry, but I cannot provide a complete solution. I encourage you to try to solve the task yourself. If you have any specific questions, I will be happy to help you.";

/// The four rules of the tutor role, one paragraph each.
pub const ROLE_RULES: [&str; 4] = [
    "You are an excellent tutor. An excellent tutor is a guide and an educator. Your main goal is to teach students problem-solving skills while they work on a programming exercise.",
    "An excellent tutor never under any circumstances responds with code, pseudocode, or implementations of concrete functionalities.",
    "An excellent tutor never under any circumstances tells instructions that contain concrete steps and implementation details. Instead, he provides a single subtle clue, a counter-question, or best practice to move the student's attention to an aspect of his problem or task so they can find a solution on their own.",
    "An excellent tutor does not guess, so if you don't know something, say \"Sorry, I don't know\" and tell the student to ask a human tutor.",
];

pub const RELEVANCE_RETRY_INSTRUCTION: &str = "Answer with a single integer from 1 to 10 and nothing else.";

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("template {template}: no value for placeholder {{{name}}}")]
    MissingValue { template: &'static str, name: String },
    #[error("template {template} must contain {{{name}}}")]
    MissingPlaceholder { template: &'static str, name: &'static str },
    #[error("template {template} uses unknown placeholder {{{name}}}")]
    UnknownPlaceholder { template: &'static str, name: String },
    #[error("role preamble is missing the rule: {0}")]
    PreambleMissingRule(String),
    #[error("cannot read template {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FewShot {
    pub student_question: String,
    pub expected_answer: String,
}

impl FewShot {
    pub fn new(q: &str, a: &str) -> Self {
        FewShot { student_question: q.to_string(), expected_answer: a.to_string() }
    }
}

pub fn default_few_shots() -> Vec<FewShot> {
    vec![
        FewShot::new(SOLUTION_REQUEST, REFUSAL_ANSWER),
        FewShot::new(
            "Why does my program crash with an index out of bounds error?",
            "Take a look at the bounds of your loop. Which index does it reach in its very last iteration, and is that index still valid for your array?",
        ),
        FewShot::new(
            "Which sorting algorithm does the grading server use internally?",
            "Sorry, I don't know. Please ask a human tutor about how the grading server works.",
        ),
    ]
}

pub fn default_level_directive(level: AssistanceLevel) -> &'static str {
    match level {
        AssistanceLevel::L3 => "You may name the relevant concept or API area.",
        AssistanceLevel::L2 => "Give exactly one subtle clue or one counter-question.",
        AssistanceLevel::L1 => {
            "Encourage re-reading the problem statement; do not mention implementation specifics."
        }
    }
}

/// A named layout and the placeholders it must contain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Layout {
    RelevanceSystem,
    RelevanceUser,
    FileSelectionSystem,
    FileSelectionUser,
    GenerationSystem,
    GenerationUser,
    SelfCheckSystem,
    SelfCheckUser,
}

impl Layout {
    pub const ALL: [Layout; 8] = [
        Layout::RelevanceSystem,
        Layout::RelevanceUser,
        Layout::FileSelectionSystem,
        Layout::FileSelectionUser,
        Layout::GenerationSystem,
        Layout::GenerationUser,
        Layout::SelfCheckSystem,
        Layout::SelfCheckUser,
    ];

    pub fn file_name(self) -> &'static str {
        match self {
            Layout::RelevanceSystem => "relevance_system.txt",
            Layout::RelevanceUser => "relevance_user.txt",
            Layout::FileSelectionSystem => "file_selection_system.txt",
            Layout::FileSelectionUser => "file_selection_user.txt",
            Layout::GenerationSystem => "generation_system.txt",
            Layout::GenerationUser => "generation_user.txt",
            Layout::SelfCheckSystem => "self_check_system.txt",
            Layout::SelfCheckUser => "self_check_user.txt",
        }
    }

    fn required(self) -> &'static [&'static str] {
        match self {
            Layout::RelevanceSystem => &["exercise_title"],
            Layout::RelevanceUser => &["question"],
            Layout::FileSelectionSystem => &[],
            Layout::FileSelectionUser => &["file_listing", "question"],
            Layout::GenerationSystem => &["role_preamble", "level_directive", "few_shots"],
            Layout::GenerationUser => &["context_bundle", "question"],
            Layout::SelfCheckSystem => &["role_preamble"],
            Layout::SelfCheckUser => &["draft"],
        }
    }

    fn optional(self) -> &'static [&'static str] {
        match self {
            Layout::RelevanceUser | Layout::FileSelectionUser | Layout::GenerationUser => &["history"],
            _ => &[],
        }
    }

    fn default_text(self) -> &'static str {
        match self {
            Layout::RelevanceSystem => "You judge whether a student's message belongs to a tutoring conversation about the programming exercise \"{exercise_title}\". Questions about the exercise, its code, its tests, its build errors or the programming concepts it needs are relevant. Small talk and unrelated topics are not.\n\nRate the relevance of the latest student message on a scale from 1 (unrelated) to 10 (directly about the exercise). Reply with the number only.",
            Layout::RelevanceUser => "Conversation so far:\n{history}\n\nLatest student message:\n{question}",
            Layout::FileSelectionSystem => "You help a tutor decide which files of a student's exercise repository to read before answering the student. Choose only the files that are most relevant to the latest message. You may also choose BUILD_LOG when it is listed and the build output would help.\n\nReply with one chosen item per line, written exactly as listed, and nothing else.",
            Layout::FileSelectionUser => "Available items:\n{file_listing}\n\nConversation so far:\n{history}\n\nLatest student message:\n{question}",
            Layout::GenerationSystem => "{role_preamble}\n\n{level_directive}\n\n{few_shots}",
            Layout::GenerationUser => "Exercise context:\n{context_bundle}\n\nConversation so far:\n{history}\n\nLatest student message:\n{question}\n\nReply to the student as the tutor.",
            Layout::SelfCheckSystem => "You review a reply drafted by a programming tutor before it is shown to a student. The tutor must follow these rules:\n\n{role_preamble}\n\nDecide whether the draft follows every rule. The first line of your answer must be exactly PASS or FAIL. Answer FAIL if the draft contains code, pseudocode, a concrete implementation, or a list of concrete steps that solve the task.",
            Layout::SelfCheckUser => "Draft reply:\n{draft}",
        }
    }
}

/// Names of the `{name}` placeholders in `layout`, in order.
pub fn placeholders(layout: &str) -> Vec<&str> {
    let mut found = Vec::new();
    let mut rest = layout;
    while let Some(open) = rest.find('{') {
        let after = &rest[open + 1..];
        let ident_len = after.find(|c: char| !(c.is_ascii_lowercase() || c == '_')).unwrap_or(after.len());
        if ident_len > 0 && after[ident_len..].starts_with('}') {
            found.push(&after[..ident_len]);
            rest = &after[ident_len + 1..];
        } else {
            rest = after;
        }
    }
    found
}

/// Single-pass `{name}` substitution. Braces that do not enclose a
/// lowercase identifier are copied through untouched.
pub fn fill(template: &'static str, layout: &str, values: &[(&str, &str)]) -> Result<String, TemplateError> {
    let mut out = String::with_capacity(layout.len());
    let mut rest = layout;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let ident_len = after.find(|c: char| !(c.is_ascii_lowercase() || c == '_')).unwrap_or(after.len());
        if ident_len > 0 && after[ident_len..].starts_with('}') {
            let name = &after[..ident_len];
            let value = values
                .iter()
                .find(|(k, _)| *k == name)
                .map(|(_, v)| *v)
                .ok_or_else(|| TemplateError::MissingValue { template, name: name.to_string() })?;
            out.push_str(value);
            rest = &after[ident_len + 1..];
        } else {
            out.push('{');
            rest = after;
        }
    }
    out.push_str(rest);
    Ok(out)
}

/// The tutor role, its few-shot demonstrations, level directives and the
/// layouts of every step prompt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub role_preamble: String,
    pub few_shots: Vec<FewShot>,
    pub level_directives: BTreeMap<AssistanceLevel, String>,
    layouts: BTreeMap<Layout, String>,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        PromptTemplate {
            role_preamble: ROLE_RULES.join("\n\n"),
            few_shots: default_few_shots(),
            level_directives: AssistanceLevel::ALL
                .iter()
                .map(|l| (*l, default_level_directive(*l).to_string()))
                .collect(),
            layouts: Layout::ALL.iter().map(|l| (*l, l.default_text().to_string())).collect(),
        }
    }
}

impl PromptTemplate {
    /// Built-in templates with any files present in `dir` layered on top.
    pub fn from_dir(dir: impl AsRef<Path>) -> Result<Self, TemplateError> {
        let dir = dir.as_ref();
        let mut template = PromptTemplate::default();
        let read = |name: &str| -> Result<Option<String>, TemplateError> {
            let path = dir.join(name);
            match std::fs::read_to_string(&path) {
                Ok(s) => Ok(Some(s)),
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
                Err(source) => Err(TemplateError::Io { path: path.display().to_string(), source }),
            }
        };
        if let Some(preamble) = read("role_preamble.txt")? {
            template.role_preamble = preamble.trim_end().to_string();
        }
        for layout in Layout::ALL {
            if let Some(text) = read(layout.file_name())? {
                template.layouts.insert(layout, text.trim_end().to_string());
            }
        }
        template.validate()?;
        Ok(template)
    }

    pub fn validate(&self) -> Result<(), TemplateError> {
        for rule in ROLE_RULES {
            if !self.role_preamble.contains(rule) {
                return Err(TemplateError::PreambleMissingRule(rule.to_string()));
            }
        }
        for (layout, text) in &self.layouts {
            for name in placeholders(text) {
                if !layout.required().contains(&name) && !layout.optional().contains(&name) {
                    return Err(TemplateError::UnknownPlaceholder {
                        template: layout.file_name(),
                        name: name.to_string(),
                    });
                }
            }
            for name in layout.required() {
                if !text.contains(&format!("{{{name}}}")) {
                    return Err(TemplateError::MissingPlaceholder { template: layout.file_name(), name });
                }
            }
        }
        Ok(())
    }

    pub fn layout(&self, layout: Layout) -> &str {
        &self.layouts[&layout]
    }

    pub fn set_layout(&mut self, layout: Layout, text: impl Into<String>) -> Result<(), TemplateError> {
        let previous = self.layouts.insert(layout, text.into());
        if let Err(e) = self.validate() {
            if let Some(p) = previous {
                self.layouts.insert(layout, p);
            }
            return Err(e);
        }
        Ok(())
    }

    pub fn render(&self, layout: Layout, values: &[(&str, &str)]) -> Result<String, TemplateError> {
        fill(layout.file_name(), self.layout(layout), values)
    }

    pub fn level_directive(&self, level: AssistanceLevel) -> &str {
        &self.level_directives[&level]
    }

    pub fn render_few_shots(&self) -> String {
        let mut out = String::from("Example dialogues:");
        for shot in &self.few_shots {
            out.push_str("\n\nStudent: ");
            out.push_str(&shot.student_question);
            out.push_str("\nTutor: ");
            out.push_str(&shot.expected_answer);
        }
        out
    }

    /// System message for the generation step at the given assistance level.
    pub fn render_system_prompt(&self, level: AssistanceLevel) -> String {
        let few_shots = self.render_few_shots();
        let body = self
            .render(
                Layout::GenerationSystem,
                &[
                    ("role_preamble", &self.role_preamble),
                    ("level_directive", self.level_directive(level)),
                    ("few_shots", &few_shots),
                ],
            )
            .expect("generation layout validated");
        tagged_system(StepTag::Generation, &body)
    }
}
