use std::convert::Infallible;
use std::path::Path;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::sse::{Event, Sse};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use futures::stream::{self, Stream};
use tokio::sync::broadcast::error::RecvError;
use tower_http::services::ServeDir;
use wristgest_core::wire::{ConfigRequest, ErrorResponse, StateResponse};

use crate::{ServiceError, ServiceState};

const BUILTIN_UI: &str = include_str!("../ui/index.html");

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match self {
            ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(ErrorResponse { error: self.to_string() })).into_response()
    }
}

/// Routes: `/events` (SSE), `/state`, `/config`, `/health` and static files
/// under `/ui/`, served from `ui_dir` or a built-in page.
pub fn router(state: Arc<ServiceState>, ui_dir: Option<&Path>) -> Router {
    let app = Router::new()
        .route("/events", get(events))
        .route("/state", get(get_state))
        .route("/config", get(get_state).post(post_config))
        .route("/health", get(health));
    let app = match ui_dir {
        Some(dir) => app.nest_service("/ui", ServeDir::new(dir)),
        None => {
            app.route("/ui", get(builtin_ui)).route("/ui/", get(builtin_ui)).route("/ui/index.html", get(builtin_ui))
        }
    };
    app.with_state(state)
}

async fn health() -> &'static str {
    "ok"
}

async fn builtin_ui() -> Html<&'static str> {
    Html(BUILTIN_UI)
}

async fn get_state(State(state): State<Arc<ServiceState>>) -> Json<StateResponse> {
    Json(state.snapshot())
}

async fn post_config(State(state): State<Arc<ServiceState>>, body: Bytes) -> Result<Json<StateResponse>, ServiceError> {
    let req: ConfigRequest =
        serde_json::from_slice(&body).map_err(|e| ServiceError::BadRequest(format!("malformed config: {e}")))?;
    if let Some(eps) = req.epsilon {
        state.set_epsilon(eps)?;
        tracing::info!(epsilon = eps, "config updated");
    }
    Ok(Json(state.snapshot()))
}

/// Subscribes before the response starts, so a client sees exactly the
/// events published after it connected. Lagging clients are cut off.
async fn events(State(state): State<Arc<ServiceState>>) -> Sse<impl Stream<Item = Result<Event, Infallible>>> {
    let rx = state.subscribe();
    tracing::info!(subscribers = state.subscribers(), "event client connected");
    let stream = stream::unfold(rx, |mut rx| async move {
        match rx.recv().await {
            Ok(ev) => {
                let data = serde_json::to_string(&ev).expect("event serialises");
                Some((Ok(Event::default().data(data)), rx))
            }
            Err(RecvError::Lagged(missed)) => {
                tracing::warn!(missed, "dropping slow event client");
                None
            }
            Err(RecvError::Closed) => None,
        }
    });
    Sse::new(stream)
}
