//! Interactive testing sessions: a technician creates a session for an
//! identification strategy or the pooled classifier, physically runs the
//! prescribed pools, reports the outcomes stage by stage, and receives the
//! verdict. Sessions are served over a small JSON HTTP API and survive restarts.

mod api;
mod error;
mod model;
mod store;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

pub use api::router;
pub use error::{Result, SessionError};
pub use model::{
    Engine, Event, PendingTest, ProtocolSpec, RecordedTest, Session, SessionStatus, SessionVerdict, TestResult, Units,
};
pub use store::SessionStore;

#[derive(Clone, Debug)]
pub struct ServiceConfig {
    pub listen: SocketAddr,
    pub data_dir: PathBuf,
}

/// Serves the API until Ctrl-C.
pub async fn serve(config: ServiceConfig) -> std::io::Result<()> {
    let store = SessionStore::open(&config.data_dir).map_err(std::io::Error::other)?;
    let listener = tokio::net::TcpListener::bind(config.listen).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(Arc::new(store)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
