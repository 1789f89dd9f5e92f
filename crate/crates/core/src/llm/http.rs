use std::time::{Duration, Instant};

use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde_json::{json, Value};

use super::{BackendKind, ChatPrompt, LlmBackend, LlmError, LlmExchange};

/// Delays between attempts. The number of retries is `delays.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct RetryPolicy {
    pub delays: Vec<Duration>,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { delays: vec![Duration::from_millis(500), Duration::from_secs(2)] }
    }
}

#[derive(Debug, Clone)]
pub struct HttpConfig {
    /// Either a base URL (`.../v1`) or the full `.../chat/completions` URL.
    pub endpoint: String,
    pub model: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
    pub retry: RetryPolicy,
}

impl HttpConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        HttpConfig {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key: None,
            timeout: Duration::from_secs(60),
            retry: RetryPolicy::default(),
        }
    }

    pub fn completions_url(&self) -> String {
        let trimmed = self.endpoint.trim_end_matches('/');
        if trimmed.ends_with("/chat/completions") {
            trimmed.to_string()
        } else {
            format!("{trimmed}/chat/completions")
        }
    }
}

/// Blocking client for OpenAI-compatible `chat/completions` endpoints.
///
/// Must not be called from inside an async executor thread; the server runs
/// pipelines on the blocking pool.
pub struct HttpBackend {
    client: Client,
    config: HttpConfig,
}

enum Attempt {
    Done(String),
    Transient(String),
    Fatal(LlmError),
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Result<Self, LlmError> {
        if config.endpoint.trim().is_empty() {
            return Err(LlmError::Config("LLM_ENDPOINT is empty".into()));
        }
        if config.model.trim().is_empty() {
            return Err(LlmError::Config("LLM_MODEL is empty".into()));
        }
        let client =
            Client::builder().timeout(config.timeout).build().map_err(|e| LlmError::Config(e.to_string()))?;
        Ok(HttpBackend { client, config })
    }

    pub fn request_body(&self, prompt: &ChatPrompt) -> Value {
        json!({
            "model": self.config.model,
            "messages": prompt.messages,
            "temperature": prompt.temperature,
            "max_tokens": prompt.max_tokens,
            "stream": false,
        })
    }

    fn attempt(&self, url: &str, body: &Value) -> Attempt {
        let mut request = self.client.post(url).json(body);
        if let Some(key) = &self.config.api_key {
            request = request.bearer_auth(key);
        }
        let response = match request.send() {
            Ok(r) => r,
            Err(e) if e.is_timeout() || e.is_connect() || e.is_request() => {
                return Attempt::Transient(e.to_string())
            }
            Err(e) => {
                return Attempt::Fatal(LlmError::BackendUnavailable { attempts: 1, reason: e.to_string() })
            }
        };
        let status = response.status();
        let text = match response.text() {
            Ok(t) => t,
            Err(e) if e.is_timeout() => return Attempt::Transient(e.to_string()),
            Err(e) => return Attempt::Fatal(LlmError::MalformedResponse(e.to_string())),
        };
        if status == StatusCode::TOO_MANY_REQUESTS || status.is_server_error() {
            return Attempt::Transient(format!("HTTP {}: {}", status.as_u16(), text));
        }
        if !status.is_success() {
            return Attempt::Fatal(LlmError::BackendRejected { status: status.as_u16(), body: text });
        }
        match extract_completion(&text) {
            Ok(c) => Attempt::Done(c),
            Err(e) => Attempt::Fatal(e),
        }
    }
}

/// Pulls `choices[0].message.content` out of a response body, unmodified.
pub(crate) fn extract_completion(body: &str) -> Result<String, LlmError> {
    let value: Value = serde_json::from_str(body).map_err(|e| LlmError::MalformedResponse(e.to_string()))?;
    let message = value
        .get("choices")
        .and_then(|c| c.get(0))
        .and_then(|c| c.get("message"))
        .ok_or_else(|| LlmError::MalformedResponse("no choices[0].message".into()))?;
    match message.get("content") {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(Value::Null) | None => Ok(String::new()),
        Some(other) => Err(LlmError::MalformedResponse(format!("unexpected content: {other}"))),
    }
}

impl LlmBackend for HttpBackend {
    fn complete(&self, prompt: &ChatPrompt) -> Result<LlmExchange, LlmError> {
        let url = self.config.completions_url();
        let body = self.request_body(prompt);
        let started = Instant::now();
        let mut attempts = 0u32;
        let mut delays = self.config.retry.delays.iter();
        loop {
            attempts += 1;
            match self.attempt(&url, &body) {
                Attempt::Done(completion) => {
                    return Ok(LlmExchange {
                        prompt: prompt.clone(),
                        completion,
                        latency_ms: started.elapsed().as_millis() as u64,
                        backend: BackendKind::Http,
                    })
                }
                Attempt::Fatal(e) => return Err(e),
                Attempt::Transient(reason) => match delays.next() {
                    Some(delay) => {
                        tracing::warn!(attempts, %reason, "transient backend failure, retrying");
                        std::thread::sleep(*delay);
                    }
                    None => return Err(LlmError::BackendUnavailable { attempts, reason }),
                },
            }
        }
    }

    fn kind(&self) -> BackendKind {
        BackendKind::Http
    }
}
