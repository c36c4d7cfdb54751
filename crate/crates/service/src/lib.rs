//! Live gesture events over HTTP.
//!
//! A blocking task drives the two-stage pipeline from an audio source and
//! publishes every event on a broadcast channel. Each `/events` subscriber
//! gets its own receiver; a subscriber that falls a full channel behind is
//! disconnected so the pipeline never waits on a slow client.

mod error;
mod feed;
mod options;
mod routes;
mod state;

pub use error::{Result, ServiceError};
pub use feed::{spawn_feed, LoopSource};
pub use options::{open_source, run, ServeOptions, SourceKind};
pub use routes::router;
pub use state::{ServiceState, DEFAULT_CHANNEL_CAPACITY};

use tokio::net::TcpListener;

/// Binds `host:port`, reporting an occupied port as [`ServiceError::PortInUse`].
pub async fn bind(host: &str, port: u16) -> Result<TcpListener> {
    TcpListener::bind((host, port)).await.map_err(|e| match e.kind() {
        std::io::ErrorKind::AddrInUse => ServiceError::PortInUse(port),
        _ => ServiceError::Io(e),
    })
}
