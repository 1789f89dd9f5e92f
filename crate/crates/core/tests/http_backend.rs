use std::collections::VecDeque;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};

use socratic_tutor::llm::{
    tagged_system, BackendKind, ChatPrompt, HttpBackend, HttpConfig, LlmBackend, LlmError, RetryPolicy,
    StepTag,
};

#[derive(Default)]
struct Scripted {
    replies: Mutex<VecDeque<(u16, Value)>>,
    seen: Mutex<Vec<(Option<String>, Value)>>,
}

async fn handler(
    State(s): State<Arc<Scripted>>,
    headers: HeaderMap,
    Json(body): Json<Value>,
) -> (StatusCode, Json<Value>) {
    let auth = headers.get("authorization").map(|v| v.to_str().unwrap().to_string());
    s.seen.lock().unwrap().push((auth, body));
    let (status, reply) = s.replies.lock().unwrap().pop_front().unwrap_or((500, json!({"error": "empty"})));
    (StatusCode::from_u16(status).unwrap(), Json(reply))
}

/// Starts a chat-completions stub on a background runtime.
fn stub(replies: Vec<(u16, Value)>) -> (SocketAddr, Arc<Scripted>) {
    let state = Arc::new(Scripted { replies: Mutex::new(replies.into()), ..Default::default() });
    let app = Router::new().route("/v1/chat/completions", post(handler)).with_state(state.clone());
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    listener.set_nonblocking(true).unwrap();
    let addr = listener.local_addr().unwrap();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::from_std(listener).unwrap();
            axum::serve(listener, app).await.unwrap();
        });
    });
    (addr, state)
}

fn ok(content: &str) -> (u16, Value) {
    (200, json!({"choices": [{"index": 0, "message": {"role": "assistant", "content": content}}]}))
}

fn backend(addr: SocketAddr) -> HttpBackend {
    let mut config = HttpConfig::new(format!("http://{addr}/v1"), "test-model");
    config.api_key = Some("sk-test".into());
    config.retry = RetryPolicy { delays: vec![Duration::from_millis(10), Duration::from_millis(20)] };
    config.timeout = Duration::from_secs(5);
    HttpBackend::new(config).unwrap()
}

fn prompt() -> ChatPrompt {
    ChatPrompt::new(StepTag::Relevance, tagged_system(StepTag::Relevance, "Rate it."), "Why?".into()).unwrap()
}

#[test]
fn retries_transient_then_succeeds() {
    let (addr, state) = stub(vec![(500, json!({})), (429, json!({})), ok(" 7\n")]);
    let exchange = backend(addr).complete(&prompt()).unwrap();
    assert_eq!(exchange.completion, " 7\n");
    assert_eq!(exchange.backend, BackendKind::Http);

    let seen = state.seen.lock().unwrap();
    assert_eq!(seen.len(), 3);
    let (auth, body) = &seen[0];
    assert_eq!(auth.as_deref(), Some("Bearer sk-test"));
    assert_eq!(body["model"], "test-model");
    assert_eq!(body["temperature"], 0.0);
    assert_eq!(body["max_tokens"], 1024);
    assert_eq!(body["stream"], false);
    assert_eq!(body["messages"][0]["role"], "system");
    assert!(body["messages"][0]["content"].as_str().unwrap().starts_with("STEP: relevance\n"));
    assert_eq!(body["messages"][1], json!({"role": "user", "content": "Why?"}));
}

#[test]
fn gives_up_after_retries() {
    let (addr, state) = stub(vec![(503, json!({})), (503, json!({})), (503, json!({})), ok("never")]);
    match backend(addr).complete(&prompt()) {
        Err(LlmError::BackendUnavailable { attempts, .. }) => assert_eq!(attempts, 3),
        other => panic!("unexpected {other:?}"),
    }
    assert_eq!(state.seen.lock().unwrap().len(), 3);
}

#[test]
fn client_errors_are_not_retried() {
    let (addr, state) = stub(vec![(401, json!({"error": "bad key"})), ok("never")]);
    match backend(addr).complete(&prompt()) {
        Err(LlmError::BackendRejected { status, body }) => {
            assert_eq!(status, 401);
            assert!(body.contains("bad key"));
        }
        other => panic!("unexpected {other:?}"),
    }
    assert_eq!(state.seen.lock().unwrap().len(), 1);
}

#[test]
fn malformed_body_is_reported() {
    let (addr, _) = stub(vec![(200, json!({"nothing": true}))]);
    assert!(matches!(backend(addr).complete(&prompt()), Err(LlmError::MalformedResponse(_))));
}

#[test]
fn connection_refused_is_unavailable() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    assert!(matches!(
        backend(addr).complete(&prompt()),
        Err(LlmError::BackendUnavailable { attempts: 3, .. })
    ));
}
