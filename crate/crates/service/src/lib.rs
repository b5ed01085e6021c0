//! HTTP completion service: validates requests, enforces per-user rate limits, fans out to
//! the model gateway, persists telemetry and accepts feedback.

pub mod api;
pub mod backend_stub;
pub mod clock;
pub mod config;
pub mod rate_limit;

use std::net::SocketAddr;
use std::sync::Arc;

use compleval_core::gateway::Gateway;
use compleval_core::telemetry::TelemetryStore;
use tokio::net::TcpListener;

pub use api::router;
pub use clock::{Clock, ManualClock, SystemClock};
pub use config::ServiceConfig;
pub use rate_limit::{Admission, RateLimiter};

/// Shared state behind every handler.
pub struct AppState {
    pub gateway: Gateway,
    pub store: Arc<TelemetryStore>,
    pub limiter: RateLimiter,
    pub clock: Arc<dyn Clock>,
    pub smart_invocation: bool,
    pub shuffle_seed: Option<u64>,
}

impl AppState {
    pub fn from_config(config: &ServiceConfig, clock: Arc<dyn Clock>) -> anyhow::Result<Self> {
        let gateway = Gateway::from_configs(config.backends.clone())?;
        let store = TelemetryStore::open(&config.telemetry_path)?;
        Ok(AppState {
            gateway,
            store: Arc::new(store),
            limiter: RateLimiter::new(config.rate_limit_per_hour),
            clock,
            smart_invocation: config.smart_invocation,
            shuffle_seed: config.shuffle_seed,
        })
    }
}

/// Binds `addr` and serves in the background, returning the bound address.
pub async fn spawn_server(state: Arc<AppState>, addr: SocketAddr) -> std::io::Result<SocketAddr> {
    let listener = TcpListener::bind(addr).await?;
    let local = listener.local_addr()?;
    tokio::spawn(async move {
        if let Err(e) = axum::serve(listener, router(state)).await {
            tracing::error!(%e, "server stopped");
        }
    });
    Ok(local)
}
