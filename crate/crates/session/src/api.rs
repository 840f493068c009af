use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::json;
use uuid::Uuid;

use crate::error::SessionError;
use crate::model::{ProtocolSpec, Session, SessionStatus, TestResult};
use crate::store::SessionStore;

/// The session API:
///
/// | method | path | |
/// |---|---|---|
/// | POST | `/sessions` | create from a [`ProtocolSpec`] |
/// | GET | `/sessions[?status=…]` | list |
/// | GET | `/sessions/{id}` | one session |
/// | POST | `/sessions/{id}/results` | `{"results": [{"test_id", "outcome"}]}` for the whole pending stage |
/// | DELETE | `/sessions/{id}` | |
pub fn router(store: Arc<SessionStore>) -> Router {
    Router::new()
        .route("/sessions", post(create).get(list))
        .route("/sessions/{id}", get(fetch).delete(remove))
        .route("/sessions/{id}/results", post(submit))
        .with_state(store)
}

type ApiResult<T> = Result<T, SessionError>;

impl SessionError {
    pub fn status(&self) -> StatusCode {
        match self {
            SessionError::NotFound(_) => StatusCode::NOT_FOUND,
            SessionError::InvalidSpec(_) | SessionError::Rejected(_) => StatusCode::UNPROCESSABLE_ENTITY,
            SessionError::Malformed(_)
            | SessionError::PartialStage { .. }
            | SessionError::DuplicateTestId(_)
            | SessionError::UnknownTestId(_) => StatusCode::BAD_REQUEST,
            SessionError::StaleTestId(_) | SessionError::Concluded(_) => StatusCode::CONFLICT,
            SessionError::Storage(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl IntoResponse for SessionError {
    fn into_response(self) -> Response {
        let status = self.status();
        if status.is_server_error() {
            tracing::error!(error = %self, "request failed");
        }
        let body = json!({ "error": { "code": self.code(), "message": self.to_string() } });
        (status, Json(body)).into_response()
    }
}

/// Parses a JSON body; syntax errors are malformed requests, well-formed JSON
/// of the wrong shape is an invalid spec (serde names the offending field).
fn parse<T: DeserializeOwned>(body: &[u8]) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| match e.classify() {
        serde_json::error::Category::Data => SessionError::InvalidSpec(e.to_string()),
        _ => SessionError::Malformed(e.to_string()),
    })
}

fn parse_id(raw: &str) -> ApiResult<Uuid> {
    raw.parse()
        .map_err(|_| SessionError::Malformed(format!("{raw:?} is not a session id")))
}

/// Store calls do blocking file I/O and may wait on a session's lease.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| SessionError::Storage(format!("worker failed: {e}")))?
}

async fn create(State(store): State<Arc<SessionStore>>, body: Bytes) -> ApiResult<(StatusCode, Json<Session>)> {
    let spec: ProtocolSpec = parse(&body)?;
    let session = blocking(move || store.create(spec)).await?;
    Ok((StatusCode::CREATED, Json(Session::clone(&session))))
}

#[derive(Deserialize)]
struct ListQuery {
    status: Option<SessionStatus>,
}

async fn list(
    State(store): State<Arc<SessionStore>>,
    query: Result<Query<ListQuery>, QueryRejection>,
) -> ApiResult<Json<Vec<Session>>> {
    let Query(query) = query.map_err(|e| SessionError::Malformed(e.body_text()))?;
    Ok(Json(
        store.list(query.status).iter().map(|s| Session::clone(s)).collect(),
    ))
}

async fn fetch(State(store): State<Arc<SessionStore>>, Path(id): Path<String>) -> ApiResult<Json<Session>> {
    let session = store.get(parse_id(&id)?)?;
    Ok(Json(Session::clone(&session)))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Submission {
    results: Vec<TestResult>,
}

async fn submit(
    State(store): State<Arc<SessionStore>>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<Session>> {
    let id = parse_id(&id)?;
    let Submission { results } = parse(&body).map_err(|e| match e {
        SessionError::InvalidSpec(msg) => SessionError::Malformed(msg),
        other => other,
    })?;
    let session = blocking(move || store.submit(id, results)).await?;
    Ok(Json(Session::clone(&session)))
}

async fn remove(State(store): State<Arc<SessionStore>>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    let id = parse_id(&id)?;
    blocking(move || store.delete(id)).await?;
    Ok(StatusCode::NO_CONTENT)
}
