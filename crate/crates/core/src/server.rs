//! JSON-over-HTTP facade for the chat UI and other clients.
//!
//! | Method | Path                                   | Success                        |
//! |--------|----------------------------------------|--------------------------------|
//! | POST   | `/api/sessions`                        | 201 session                    |
//! | GET    | `/api/sessions/{id}`                   | 200 session                    |
//! | POST   | `/api/sessions/{id}/messages`          | 200 `{tutor_message, outcome}` |
//! | GET    | `/api/sessions/{id}/traces/{sequence}` | 200 trace                      |
//! | GET    | `/api/exercises`                       | 200 `[{exercise_id, title}]`   |
//!
//! Every error body is `{"code", "message"}`.

use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::{HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tower_http::cors::{Any, CorsLayer};

use crate::domain::{DomainError, Message, Outcome};
use crate::service::{ServiceError, TutorService};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError { status, code, message: message.into() }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody { code: self.code.to_string(), message: self.message };
        (self.status, Json(body)).into_response()
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        let message = e.to_string();
        match e {
            ServiceError::UnknownExercise(_) => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "unknown_exercise", message)
            }
            ServiceError::SessionNotFound(_) | ServiceError::TraceNotFound(_) => {
                ApiError::new(StatusCode::NOT_FOUND, "not_found", message)
            }
            ServiceError::Busy(_) => ApiError::new(StatusCode::CONFLICT, "busy", message),
            ServiceError::Domain(DomainError::EmptyContent) => {
                ApiError::new(StatusCode::BAD_REQUEST, "empty_content", message)
            }
            ServiceError::Domain(DomainError::AlternationViolation(_)) => {
                ApiError::new(StatusCode::CONFLICT, "alternation_violation", message)
            }
            ServiceError::Domain(DomainError::SessionClosed) => {
                ApiError::new(StatusCode::CONFLICT, "session_closed", message)
            }
            ServiceError::Fixture { .. } | ServiceError::Store(_) | ServiceError::Pipeline(_) => {
                ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
            }
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "bad_request", r.body_text())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreateSessionRequest {
    pub exercise_id: String,
    pub student_id: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PostMessageRequest {
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PostMessageResponse {
    pub tutor_message: Message,
    pub outcome: Outcome,
}

type AppState = Arc<TutorService>;

/// Runs blocking service work (file I/O, model calls) off the async workers.
async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce() -> Result<T, ServiceError> + Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
        .map_err(ApiError::from)
}

async fn create_session(
    State(svc): State<AppState>,
    body: Result<Json<CreateSessionRequest>, JsonRejection>,
) -> Result<impl IntoResponse, ApiError> {
    let Json(req) = body?;
    let session = blocking(move || svc.create_session(&req.exercise_id, &req.student_id)).await?;
    Ok((StatusCode::CREATED, Json(session)))
}

async fn get_session(
    State(svc): State<AppState>,
    Path(id): Path<String>,
) -> Result<impl IntoResponse, ApiError> {
    Ok(Json(blocking(move || svc.get_session(&id)).await?))
}

async fn post_message(
    State(svc): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<PostMessageRequest>, JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(req) = body?;
    let posted = blocking(move || svc.try_post_message(&id, &req.content)).await?;
    let status =
        if posted.outcome == Outcome::Unavailable { StatusCode::SERVICE_UNAVAILABLE } else { StatusCode::OK };
    if status == StatusCode::SERVICE_UNAVAILABLE {
        let body = ErrorBody { code: "backend_unavailable".into(), message: posted.tutor_message.content };
        return Ok((status, Json(body)).into_response());
    }
    let body = PostMessageResponse { tutor_message: posted.tutor_message, outcome: posted.outcome };
    Ok((status, Json(body)).into_response())
}

async fn get_trace(
    State(svc): State<AppState>,
    Path((id, sequence)): Path<(String, String)>,
) -> Result<impl IntoResponse, ApiError> {
    let sequence: u64 = sequence
        .parse()
        .map_err(|_| ApiError::new(StatusCode::NOT_FOUND, "not_found", format!("no trace {sequence}")))?;
    Ok(Json(blocking(move || svc.get_trace(&id, sequence)).await?))
}

async fn list_exercises(State(svc): State<AppState>) -> Result<impl IntoResponse, ApiError> {
    Ok(Json(blocking(move || Ok(svc.list_exercises())).await?))
}

async fn fallback() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route")
}

pub fn router(service: Arc<TutorService>, cors_origin: Option<&str>) -> Router {
    let mut app = Router::new()
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}", get(get_session))
        .route("/api/sessions/{id}/messages", post(post_message))
        .route("/api/sessions/{id}/traces/{sequence}", get(get_trace))
        .route("/api/exercises", get(list_exercises))
        .fallback(fallback)
        .with_state(service);
    if let Some(origin) = cors_origin {
        let cors = CorsLayer::new().allow_methods([Method::GET, Method::POST]).allow_headers(Any);
        let cors = if origin == "*" {
            cors.allow_origin(Any)
        } else {
            match HeaderValue::from_str(origin) {
                Ok(v) => cors.allow_origin(v),
                Err(_) => {
                    tracing::warn!(origin, "ignoring invalid CORS_ORIGIN");
                    return app;
                }
            }
        };
        app = app.layer(cors);
    }
    app
}

/// Serves until `shutdown` resolves, then drains in-flight requests.
pub async fn serve(
    listener: tokio::net::TcpListener,
    service: Arc<TutorService>,
    cors_origin: Option<String>,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let app = router(service, cors_origin.as_deref());
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await
}
