//! HTTP routes.
//!
//! | method | path                     | body            | success |
//! |--------|--------------------------|-----------------|---------|
//! | POST   | `/sessions`              | `CreateSession` | 201     |
//! | GET    | `/sessions/{id}`         |                 | 200     |
//! | GET    | `/sessions/{id}/next`    |                 | 200     |
//! | POST   | `/sessions/{id}/answers` | `SubmitAnswer`  | 200     |
//! | POST   | `/sessions/{id}/abandon` |                 | 200     |
//!
//! Errors are `{"code", "message"}` objects, plus `allowed_pairs` for
//! sequencing errors.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::{HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Serialize;
use tower_http::cors::{AllowOrigin, Any, CorsLayer};
use uuid::Uuid;

use crate::error::{ElicitError, Result};
use crate::reference::ReferenceRuns;
use crate::service::{CreateSession, Service, SubmitAnswer};
use crate::session::WirePair;

#[derive(Serialize)]
struct ErrorBody {
    code: &'static str,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    allowed_pairs: Option<Vec<WirePair>>,
}

impl ElicitError {
    pub fn status(&self) -> StatusCode {
        match self {
            ElicitError::Validation(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ElicitError::NotFound(_) => StatusCode::NOT_FOUND,
            ElicitError::Sequencing { .. } | ElicitError::State(_) | ElicitError::Conflict(_) => {
                StatusCode::CONFLICT
            }
            ElicitError::Core(fillin_core::Error::Domain(_)) => StatusCode::UNPROCESSABLE_ENTITY,
            ElicitError::Core(_) | ElicitError::Io(_) | ElicitError::Json(_) => {
                StatusCode::INTERNAL_SERVER_ERROR
            }
        }
    }
}

impl IntoResponse for ElicitError {
    fn into_response(self) -> Response {
        let status = self.status();
        if status.is_server_error() {
            tracing::error!(error = %self, "request failed");
        }
        let code = if status == StatusCode::UNPROCESSABLE_ENTITY {
            "validation"
        } else {
            self.code()
        };
        let allowed_pairs = match &self {
            ElicitError::Sequencing { allowed, .. } => {
                Some(allowed.iter().map(|&p| p.into()).collect())
            }
            _ => None,
        };
        let body = ErrorBody {
            code,
            message: self.to_string(),
            allowed_pairs,
        };
        (status, Json(body)).into_response()
    }
}

type Shared = Arc<Service>;

fn session_id(raw: &str) -> Result<Uuid> {
    raw.parse()
        .map_err(|_| ElicitError::NotFound(raw.to_string()))
}

fn body<T>(req: std::result::Result<Json<T>, JsonRejection>) -> Result<T> {
    req.map(|Json(t)| t)
        .map_err(|e| ElicitError::Validation(e.body_text()))
}

async fn create(
    State(svc): State<Shared>,
    req: std::result::Result<Json<CreateSession>, JsonRejection>,
) -> Result<impl IntoResponse> {
    let view = svc.create(body(req)?)?;
    Ok((StatusCode::CREATED, Json(view)))
}

async fn show(State(svc): State<Shared>, Path(id): Path<String>) -> Result<impl IntoResponse> {
    Ok(Json(svc.view(session_id(&id)?)?))
}

async fn next(State(svc): State<Shared>, Path(id): Path<String>) -> Result<impl IntoResponse> {
    Ok(Json(svc.next(session_id(&id)?)?))
}

async fn answer(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    req: std::result::Result<Json<SubmitAnswer>, JsonRejection>,
) -> Result<impl IntoResponse> {
    let id = session_id(&id)?;
    Ok(Json(svc.submit(id, body(req)?)?))
}

async fn abandon(State(svc): State<Shared>, Path(id): Path<String>) -> Result<impl IntoResponse> {
    Ok(Json(svc.abandon(session_id(&id)?)?))
}

/// Browser origins allowed to call the API.
#[derive(Debug, Clone, Default)]
pub enum Cors {
    /// No CORS headers.
    #[default]
    Off,
    Any,
    Origins(Vec<String>),
}

pub fn router(svc: Shared, cors: &Cors) -> Result<Router> {
    let router = Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(show))
        .route("/sessions/{id}/next", get(next))
        .route("/sessions/{id}/answers", post(answer))
        .route("/sessions/{id}/abandon", post(abandon))
        .with_state(svc);
    let layer = CorsLayer::new()
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([axum::http::header::CONTENT_TYPE]);
    Ok(match cors {
        Cors::Off => router,
        Cors::Any => router.layer(layer.allow_origin(Any)),
        Cors::Origins(list) => {
            let origins = list
                .iter()
                .map(|o| {
                    HeaderValue::from_str(o)
                        .map_err(|_| ElicitError::Validation(format!("bad CORS origin {o:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            router.layer(layer.allow_origin(AllowOrigin::list(origins)))
        }
    })
}

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub addr: SocketAddr,
    /// Journal file; sessions are memory-only without one.
    pub journal: Option<PathBuf>,
    pub cors: Cors,
}

/// Runs the service until the process is stopped.
pub async fn serve(cfg: ServeConfig) -> Result<()> {
    let refs = ReferenceRuns::bundled()?;
    let svc = match &cfg.journal {
        Some(p) => Service::persistent(p, refs)?,
        None => Service::in_memory(refs),
    };
    let app = router(Arc::new(svc), &cfg.cors)?;
    let listener = tokio::net::TcpListener::bind(cfg.addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, app).await?;
    Ok(())
}
