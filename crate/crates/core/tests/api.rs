mod common;

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use common::{mock_service, service_with, DownBackend, GateBackend, HINT};
use socratic_tutor::llm::{MockEntry, StepTag};
use socratic_tutor::pipeline::{REJECTION_REPLY, UNAVAILABLE_REPLY};
use socratic_tutor::server::router;
use socratic_tutor::service::TutorService;

fn app(svc: TutorService) -> Router {
    router(Arc::new(svc), None)
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, value)
}

async fn create(app: &Router) -> String {
    let (status, body) =
        call(app, "POST", "/api/sessions", Some(json!({"exercise_id": "bubblesort", "student_id": "s1"})))
            .await;
    assert_eq!(status, StatusCode::CREATED);
    body["session_id"].as_str().unwrap().to_string()
}

fn assert_error(body: &Value, code: &str) {
    assert_eq!(body["code"], code);
    assert!(body["message"].is_string());
    assert_eq!(body.as_object().unwrap().len(), 2);
}

#[tokio::test]
async fn create_post_get_trace() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(mock_service(common::happy_script(), dir.path()));
    let id = create(&app).await;

    let (status, body) = call(
        &app,
        "POST",
        &format!("/api/sessions/{id}/messages"),
        Some(json!({"content": "how do I start?"})),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["outcome"], "answered");
    assert_eq!(body["tutor_message"]["content"], HINT);
    assert_eq!(body["tutor_message"]["role"], "tutor");
    assert_eq!(body["tutor_message"]["sequence"], 1);

    let (status, session) = call(&app, "GET", &format!("/api/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(session["messages"].as_array().unwrap().len(), 2);
    assert_eq!(session["state"], "active");

    let (status, trace) = call(&app, "GET", &format!("/api/sessions/{id}/traces/0"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(trace["outcome"], "answered");
    assert_eq!(trace["llm_calls"].as_array().unwrap().len(), 4);

    let (status, body) = call(&app, "GET", &format!("/api/sessions/{id}/traces/1"), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_error(&body, "not_found");
    let (status, _) = call(&app, "GET", &format!("/api/sessions/{id}/traces/abc"), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn error_statuses() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(mock_service(vec![], dir.path()));

    let (status, body) = call(&app, "GET", "/api/sessions/does-not-exist", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_error(&body, "not_found");

    let (status, body) =
        call(&app, "POST", "/api/sessions/does-not-exist/messages", Some(json!({"content": "hi"}))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_error(&body, "not_found");

    let (status, body) =
        call(&app, "POST", "/api/sessions", Some(json!({"exercise_id": "missing-ex", "student_id": "s1"})))
            .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_error(&body, "unknown_exercise");

    let id = create(&app).await;
    let (status, body) =
        call(&app, "POST", &format!("/api/sessions/{id}/messages"), Some(json!({"content": "   "}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_error(&body, "empty_content");

    let (status, body) =
        call(&app, "POST", &format!("/api/sessions/{id}/messages"), Some(json!({"text": "x"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_error(&body, "bad_request");

    let (status, body) = call(&app, "GET", "/api/nowhere", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_error(&body, "not_found");
}

#[tokio::test]
async fn malformed_json_is_400() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(mock_service(vec![], dir.path()));
    let req = Request::builder()
        .method("POST")
        .uri("/api/sessions")
        .header("content-type", "application/json")
        .body(Body::from("{not json"))
        .unwrap();
    let resp = app.oneshot(req).await.unwrap();
    assert_eq!(resp.status(), StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn rejection_is_200_with_outcome() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(mock_service(vec![MockEntry::new(StepTag::Relevance, "3")], dir.path()));
    let id = create(&app).await;
    let (status, body) =
        call(&app, "POST", &format!("/api/sessions/{id}/messages"), Some(json!({"content": "Best pizza?"})))
            .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["outcome"], "rejected_off_topic");
    assert_eq!(body["tutor_message"]["content"], REJECTION_REPLY);
}

#[tokio::test]
async fn backend_down_is_503() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(service_with(Arc::new(DownBackend), dir.path()));
    let id = create(&app).await;
    let (status, body) = call(
        &app,
        "POST",
        &format!("/api/sessions/{id}/messages"),
        Some(json!({"content": "How to start?"})),
    )
    .await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);
    assert_error(&body, "backend_unavailable");
    assert_eq!(body["message"], UNAVAILABLE_REPLY);
    let (_, trace) = call(&app, "GET", &format!("/api/sessions/{id}/traces/0"), None).await;
    assert_eq!(trace["outcome"], "unavailable");
    assert!(trace["error"].as_str().unwrap().contains("connection refused"));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn concurrent_post_gets_409() {
    let dir = tempfile::tempdir().unwrap();
    let (backend, entered, release) = GateBackend::new();
    let app = app(service_with(Arc::new(backend), dir.path()));
    let id = create(&app).await;
    let uri = format!("/api/sessions/{id}/messages");

    let first = {
        let (app, uri) = (app.clone(), uri.clone());
        tokio::spawn(
            async move { call(&app, "POST", &uri, Some(json!({"content": "first question"}))).await },
        )
    };
    tokio::task::spawn_blocking(move || entered.recv().unwrap()).await.unwrap();

    let (status, body) = call(&app, "POST", &uri, Some(json!({"content": "second question"}))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_error(&body, "busy");

    release.send(()).unwrap();
    let (status, body) = first.await.unwrap();
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["outcome"], "rejected_off_topic");

    let (_, session) = call(&app, "GET", &format!("/api/sessions/{id}"), None).await;
    assert_eq!(session["messages"].as_array().unwrap().len(), 2);
}

#[tokio::test]
async fn lists_exercises() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(mock_service(vec![], dir.path()));
    let (status, body) = call(&app, "GET", "/api/exercises", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, json!([{"exercise_id": "bubblesort", "title": "Bubble Sort"}]));
}

#[tokio::test]
async fn restart_loses_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let id = {
        let app = app(mock_service(common::happy_script(), dir.path()));
        let id = create(&app).await;
        call(
            &app,
            "POST",
            &format!("/api/sessions/{id}/messages"),
            Some(json!({"content": "how do I start?"})),
        )
        .await;
        id
    };
    let app = app(mock_service(vec![], dir.path()));
    let (status, session) = call(&app, "GET", &format!("/api/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(session["messages"][1]["content"], HINT);
}

#[tokio::test]
async fn cors_header_for_configured_origin() {
    let dir = tempfile::tempdir().unwrap();
    let app = router(Arc::new(mock_service(vec![], dir.path())), Some("http://localhost:5173"));
    let req = Request::builder()
        .uri("/api/exercises")
        .header("origin", "http://localhost:5173")
        .body(Body::empty())
        .unwrap();
    let resp = app.oneshot(req).await.unwrap();
    assert_eq!(resp.headers()["access-control-allow-origin"], "http://localhost:5173");
}
