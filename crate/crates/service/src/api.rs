use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use compleval_core::gateway::dedup_and_shuffle;
use compleval_core::telemetry::{Ide, InvocationKind, NewRecord, StoreError, TelemetryRecord};
use compleval_core::trigger::is_mid_token;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::rate_limit::Admission;
use crate::AppState;

#[derive(Debug)]
pub enum ApiError {
    BadRequest { error: String, field: Option<&'static str> },
    RateLimited { retry_after_s: u64 },
    NotFound,
    Internal(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        match self {
            ApiError::BadRequest { error, field } => {
                (StatusCode::BAD_REQUEST, Json(json!({ "error": error, "field": field }))).into_response()
            }
            ApiError::RateLimited { retry_after_s } => {
                let mut response =
                    (StatusCode::TOO_MANY_REQUESTS, Json(json!({ "retry_after_s": retry_after_s }))).into_response();
                response.headers_mut().insert(header::RETRY_AFTER, HeaderValue::from(retry_after_s));
                response
            }
            ApiError::NotFound => (StatusCode::NOT_FOUND, Json(json!({}))).into_response(),
            ApiError::Internal(msg) => {
                tracing::error!(%msg, "request failed");
                (StatusCode::INTERNAL_SERVER_ERROR, Json(json!({ "error": msg }))).into_response()
            }
        }
    }
}

fn parse_object(body: &Bytes) -> Result<Map<String, Value>, ApiError> {
    match serde_json::from_slice(body) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(ApiError::BadRequest { error: "body must be a JSON object".into(), field: None }),
        Err(e) => Err(ApiError::BadRequest { error: format!("malformed JSON: {e}"), field: None }),
    }
}

fn required_str<'a>(body: &'a Map<String, Value>, field: &'static str) -> Result<&'a str, ApiError> {
    match body.get(field) {
        Some(Value::String(s)) => Ok(s),
        Some(_) => Err(ApiError::BadRequest { error: format!("{field} must be a string"), field: Some(field) }),
        None => Err(ApiError::BadRequest { error: format!("missing field {field}"), field: Some(field) }),
    }
}

fn optional_str<'a>(body: &'a Map<String, Value>, field: &'static str) -> Result<Option<&'a str>, ApiError> {
    match body.get(field) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s)),
        Some(_) => Err(ApiError::BadRequest { error: format!("{field} must be a string or null"), field: Some(field) }),
    }
}

/// A validated completion request.
#[derive(Debug)]
struct CompletionRequest<'a> {
    user_token: &'a str,
    ide: Ide,
    plugin_version: &'a str,
    language: &'a str,
    left_context: &'a str,
    right_context: &'a str,
    trigger_kind: InvocationKind,
    store_context: bool,
}

impl<'a> CompletionRequest<'a> {
    fn parse(body: &'a Map<String, Value>) -> Result<Self, ApiError> {
        let user_token = required_str(body, "user_token")?;
        if user_token.trim().is_empty() {
            return Err(ApiError::BadRequest { error: "user_token is empty".into(), field: Some("user_token") });
        }
        let trigger_kind = match required_str(body, "trigger_kind")? {
            "auto" => InvocationKind::Automatic,
            "manual" => InvocationKind::Manual,
            other => {
                return Err(ApiError::BadRequest {
                    error: format!("trigger_kind must be \"auto\" or \"manual\", got {other:?}"),
                    field: Some("trigger_kind"),
                })
            }
        };
        let store_context = match body.get("store_context") {
            None | Some(Value::Null) => false,
            Some(Value::Bool(b)) => *b,
            Some(_) => {
                return Err(ApiError::BadRequest {
                    error: "store_context must be a boolean".into(),
                    field: Some("store_context"),
                })
            }
        };
        Ok(CompletionRequest {
            user_token,
            ide: Ide::from_client(required_str(body, "ide")?),
            plugin_version: required_str(body, "plugin_version")?,
            language: required_str(body, "language")?,
            left_context: required_str(body, "left_context")?,
            right_context: required_str(body, "right_context")?,
            trigger_kind,
            store_context,
        })
    }
}

#[derive(Debug, Serialize)]
struct Suggestion {
    text: String,
    model_id: String,
}

#[derive(Debug, Serialize)]
struct CompletionResponse {
    request_id: String,
    suggestions: Vec<Suggestion>,
}

async fn persist<F>(state: &AppState, write: F) -> Result<TelemetryRecord, ApiError>
where
    F: FnOnce(&compleval_core::telemetry::TelemetryStore) -> Result<TelemetryRecord, StoreError> + Send + 'static,
{
    let store = Arc::clone(&state.store);
    match tokio::task::spawn_blocking(move || write(&store)).await {
        Ok(Ok(record)) => Ok(record),
        Ok(Err(StoreError::UnknownId(_))) => Err(ApiError::NotFound),
        Ok(Err(e)) => Err(ApiError::Internal(e.to_string())),
        Err(e) => Err(ApiError::Internal(e.to_string())),
    }
}

async fn completion(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Json<CompletionResponse>, ApiError> {
    let body = parse_object(&body)?;
    let req = CompletionRequest::parse(&body)?;
    let now = state.clock.now();
    if let Admission::Deny { retry_after_s } = state.limiter.check(req.user_token, now) {
        return Err(ApiError::RateLimited { retry_after_s });
    }

    let suppressed =
        state.smart_invocation && req.trigger_kind == InvocationKind::Automatic && is_mid_token(req.left_context);
    let predictions = if suppressed {
        Vec::new()
    } else {
        state.gateway.request_completions(req.left_context, req.right_context).await
    };
    let suggestions: Vec<Suggestion> = dedup_and_shuffle(&predictions, state.shuffle_seed)
        .into_iter()
        .map(|p| Suggestion { text: p.text, model_id: p.model_id })
        .collect();

    let request_id = uuid::Uuid::new_v4().to_string();
    let record = TelemetryRecord::new(
        NewRecord {
            request_id: request_id.clone(),
            server_timestamp: now,
            language: req.language,
            left_context: req.left_context,
            right_context: req.right_context,
            store_context: req.store_context,
            trigger_kind: req.trigger_kind,
            ide: req.ide,
            plugin_version: req.plugin_version,
        },
        predictions,
        suppressed,
    );
    persist(&state, move |store| store.append(record.clone()).map(|()| record)).await?;
    Ok(Json(CompletionResponse { request_id, suggestions }))
}

async fn feedback(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Json<Value>, ApiError> {
    let body = parse_object(&body)?;
    let request_id = required_str(&body, "request_id")?.to_string();
    let chosen_text = optional_str(&body, "chosen_text")?.map(String::from);
    let ground_truth_line = required_str(&body, "ground_truth_line")?.to_string();
    let received_at = state.clock.now();
    persist(&state, move |store| {
        store.update(&request_id, |record| {
            record.apply_choice(chosen_text);
            record.apply_ground_truth(&ground_truth_line);
            record.feedback_timestamp = Some(received_at);
        })
    })
    .await?;
    Ok(Json(json!({})))
}

async fn health(State(state): State<Arc<AppState>>) -> Json<Value> {
    let backends: Vec<Value> = state
        .gateway
        .health()
        .await
        .into_iter()
        .map(|(model_id, reachable)| json!({ "model_id": model_id, "reachable": reachable }))
        .collect();
    Json(json!({ "status": "ok", "backends": backends }))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/v1/completion", post(completion))
        .route("/api/v1/feedback", post(feedback))
        .route("/health", get(health))
        .with_state(state)
}
