//! Settings from the environment and `KEY=value` config files.
//!
//! Keys mirror the environment variable names. Values in a config file take
//! precedence over the environment.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;

use crate::context::DEFAULT_CONTEXT_BUDGET;
use crate::guardrails::{PromptTemplate, ScanConfig, TemplateError};
use crate::llm::{load_mock_script, HttpBackend, HttpConfig, LlmBackend, LlmError, MockBackend};
use crate::pipeline::{Pipeline, PipelineConfig, DEFAULT_MAX_REFINEMENTS, DEFAULT_RELEVANCE_THRESHOLD};

pub const KEYS: &[&str] = &[
    "LLM_BACKEND",
    "LLM_ENDPOINT",
    "LLM_MODEL",
    "LLM_API_KEY",
    "MOCK_SCRIPT_PATH",
    "RELEVANCE_THRESHOLD",
    "MAX_REFINEMENTS",
    "CONTEXT_BUDGET_CHARS",
    "TEMPLATE_DIR",
    "CODE_KEYWORDS",
    "BIND_ADDR",
    "FIXTURES_DIR",
    "STORE_DIR",
    "CORS_ORIGIN",
];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("invalid value for {key}: {value:?} ({reason})")]
    Invalid { key: &'static str, value: String, reason: String },
    #[error("{0} is required")]
    Missing(&'static str),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Backend(#[from] LlmError),
    #[error(transparent)]
    Script(#[from] crate::llm::ScriptError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendChoice {
    Http,
    Mock,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub backend: BackendChoice,
    pub llm_endpoint: Option<String>,
    pub llm_model: Option<String>,
    pub llm_api_key: Option<String>,
    pub mock_script_path: Option<PathBuf>,
    pub relevance_threshold: u8,
    pub max_refinements: u32,
    pub context_budget: usize,
    pub template_dir: Option<PathBuf>,
    pub code_keywords: Option<String>,
    pub bind_addr: SocketAddr,
    pub fixtures_dir: PathBuf,
    pub store_dir: PathBuf,
    pub cors_origin: Option<String>,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            backend: BackendChoice::Http,
            llm_endpoint: None,
            llm_model: None,
            llm_api_key: None,
            mock_script_path: None,
            relevance_threshold: DEFAULT_RELEVANCE_THRESHOLD,
            max_refinements: DEFAULT_MAX_REFINEMENTS,
            context_budget: DEFAULT_CONTEXT_BUDGET,
            template_dir: None,
            code_keywords: None,
            bind_addr: "127.0.0.1:8080".parse().expect("static addr"),
            fixtures_dir: PathBuf::from("fixtures"),
            store_dir: PathBuf::from("data"),
            cors_origin: None,
        }
    }
}

/// Parses `KEY=value` lines. Blank lines and `#` comments are ignored;
/// values may be wrapped in double quotes.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ConfigError::Syntax { line: i + 1, message: "expected KEY=value".into() })?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(ConfigError::Syntax { line: i + 1, message: format!("unknown key {key}") });
        }
        let value = value.trim();
        let value = value.strip_prefix('"').and_then(|v| v.strip_suffix('"')).unwrap_or(value);
        out.insert(key.to_string(), value.to_string());
    }
    Ok(out)
}

fn parse<T: std::str::FromStr>(key: &'static str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::Invalid {
        key,
        value: value.to_string(),
        reason: e.to_string(),
    })
}

impl Settings {
    /// Builds settings from a key lookup. Unset keys keep their defaults.
    pub fn from_lookup(lookup: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        let get = |k: &str| lookup(k).filter(|v| !v.trim().is_empty());
        let mut s = Settings::default();
        if let Some(v) = get("LLM_BACKEND") {
            s.backend = match v.trim().to_ascii_lowercase().as_str() {
                "http" => BackendChoice::Http,
                "mock" => BackendChoice::Mock,
                _ => {
                    return Err(ConfigError::Invalid {
                        key: "LLM_BACKEND",
                        value: v,
                        reason: "expected http or mock".into(),
                    })
                }
            };
        }
        s.llm_endpoint = get("LLM_ENDPOINT");
        s.llm_model = get("LLM_MODEL");
        s.llm_api_key = get("LLM_API_KEY");
        s.mock_script_path = get("MOCK_SCRIPT_PATH").map(PathBuf::from);
        if let Some(v) = get("RELEVANCE_THRESHOLD") {
            s.relevance_threshold = parse("RELEVANCE_THRESHOLD", &v)?;
            if !(1..=10).contains(&s.relevance_threshold) {
                return Err(ConfigError::Invalid {
                    key: "RELEVANCE_THRESHOLD",
                    value: v,
                    reason: "must be within 1..=10".into(),
                });
            }
        }
        if let Some(v) = get("MAX_REFINEMENTS") {
            s.max_refinements = parse("MAX_REFINEMENTS", &v)?;
        }
        if let Some(v) = get("CONTEXT_BUDGET_CHARS") {
            s.context_budget = parse("CONTEXT_BUDGET_CHARS", &v)?;
        }
        s.template_dir = get("TEMPLATE_DIR").map(PathBuf::from);
        s.code_keywords = get("CODE_KEYWORDS");
        if let Some(v) = get("BIND_ADDR") {
            s.bind_addr = parse("BIND_ADDR", &v)?;
        }
        if let Some(v) = get("FIXTURES_DIR") {
            s.fixtures_dir = PathBuf::from(v);
        }
        if let Some(v) = get("STORE_DIR") {
            s.store_dir = PathBuf::from(v);
        }
        s.cors_origin = get("CORS_ORIGIN");
        Ok(s)
    }

    pub fn from_env() -> Result<Self, ConfigError> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    /// Environment overlaid with the file at `path`, if given.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let file = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|source| ConfigError::Io { path: p.display().to_string(), source })?;
                parse_config_file(&text)?
            }
            None => BTreeMap::new(),
        };
        Self::from_lookup(|k| file.get(k).cloned().or_else(|| std::env::var(k).ok()))
    }

    pub fn pipeline_config(&self) -> PipelineConfig {
        PipelineConfig {
            relevance_threshold: self.relevance_threshold,
            max_refinements: self.max_refinements,
            context_budget: self.context_budget,
            scan: self.code_keywords.as_deref().map(ScanConfig::from_keyword_list).unwrap_or_default(),
        }
    }

    pub fn template(&self) -> Result<PromptTemplate, ConfigError> {
        Ok(match &self.template_dir {
            Some(dir) => PromptTemplate::from_dir(dir)?,
            None => PromptTemplate::default(),
        })
    }

    pub fn backend(&self) -> Result<Arc<dyn LlmBackend>, ConfigError> {
        match self.backend {
            BackendChoice::Mock => {
                let path = self.mock_script_path.as_ref().ok_or(ConfigError::Missing("MOCK_SCRIPT_PATH"))?;
                Ok(Arc::new(MockBackend::new(load_mock_script(path)?)))
            }
            BackendChoice::Http => {
                let endpoint = self.llm_endpoint.clone().ok_or(ConfigError::Missing("LLM_ENDPOINT"))?;
                let model = self.llm_model.clone().ok_or(ConfigError::Missing("LLM_MODEL"))?;
                let mut config = HttpConfig::new(endpoint, model);
                config.api_key = self.llm_api_key.clone();
                Ok(Arc::new(HttpBackend::new(config)?))
            }
        }
    }

    pub fn pipeline(&self) -> Result<Pipeline, ConfigError> {
        Ok(Pipeline::new(self.backend()?, self.template()?, self.pipeline_config()))
    }
}
