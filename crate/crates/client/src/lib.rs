//! Client for the gesture event service: JSON control endpoints and the
//! server-sent event stream.

mod sse;

use std::collections::VecDeque;

use reqwest::StatusCode;
use thiserror::Error;
use wristgest_core::wire::{ConfigRequest, ErrorResponse, StateResponse, WireEvent};

pub use sse::SseParser;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("http error: {0}")]
    Http(#[from] reqwest::Error),
    #[error("server returned {status}: {message}")]
    Server { status: u16, message: String },
    #[error("undecodable payload: {0}")]
    Decode(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, ClientError>;

#[derive(Debug, Clone)]
pub struct Client {
    base: String,
    http: reqwest::Client,
}

impl Client {
    /// `base_url` like `http://127.0.0.1:8080`.
    pub fn new(base_url: impl Into<String>) -> Self {
        let base = base_url.into().trim_end_matches('/').to_string();
        Self { base, http: reqwest::Client::new() }
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    pub async fn health(&self) -> Result<String> {
        let resp = check(self.http.get(self.url("/health")).send().await?).await?;
        Ok(resp.text().await?)
    }

    pub async fn state(&self) -> Result<StateResponse> {
        let resp = check(self.http.get(self.url("/state")).send().await?).await?;
        Ok(serde_json::from_slice(&resp.bytes().await?)?)
    }

    pub async fn configure(&self, req: &ConfigRequest) -> Result<StateResponse> {
        let resp = check(self.http.post(self.url("/config")).json(req).send().await?).await?;
        Ok(serde_json::from_slice(&resp.bytes().await?)?)
    }

    pub async fn set_epsilon(&self, epsilon: f64) -> Result<StateResponse> {
        self.configure(&ConfigRequest { epsilon: Some(epsilon) }).await
    }

    /// Opens `/events`. Only events published after the server accepted
    /// the connection are delivered.
    pub async fn events(&self) -> Result<EventStream> {
        let resp = check(self.http.get(self.url("/events")).send().await?).await?;
        Ok(EventStream { resp, parser: SseParser::default(), pending: VecDeque::new() })
    }
}

/// Turns non-2xx responses into [`ClientError::Server`], using the
/// service's `{"error": ...}` body when present.
async fn check(resp: reqwest::Response) -> Result<reqwest::Response> {
    let status = resp.status();
    if status.is_success() {
        return Ok(resp);
    }
    let body = resp.text().await.unwrap_or_default();
    let message = serde_json::from_str::<ErrorResponse>(&body).map(|e| e.error).unwrap_or(body);
    Err(ClientError::Server { status: status.as_u16(), message })
}

/// Incrementally decoded `/events` stream.
#[derive(Debug)]
pub struct EventStream {
    resp: reqwest::Response,
    parser: SseParser,
    pending: VecDeque<String>,
}

impl EventStream {
    /// The next event, or `None` when the server closes the stream.
    pub async fn next(&mut self) -> Option<Result<WireEvent>> {
        loop {
            if let Some(data) = self.pending.pop_front() {
                return Some(serde_json::from_str(&data).map_err(ClientError::from));
            }
            match self.resp.chunk().await {
                Ok(Some(bytes)) => self.pending.extend(self.parser.feed(&bytes)),
                Ok(None) => return None,
                Err(e) => return Some(Err(e.into())),
            }
        }
    }
}

impl ClientError {
    pub fn is_bad_request(&self) -> bool {
        matches!(self, ClientError::Server { status, .. } if *status == StatusCode::BAD_REQUEST.as_u16())
    }
}
