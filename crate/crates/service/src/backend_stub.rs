//! A minimal model server speaking the backend protocol, for exercising
//! [`HttpBackend`](compleval_core::gateway::HttpBackend) without a real model.

use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::State;
use axum::http::StatusCode;
use axum::routing::post;
use axum::{Json, Router};
use compleval_core::gateway::{BackendRequest, BackendResponse, MockBackend};
use tokio::net::TcpListener;

async fn generate(
    State(backend): State<Arc<MockBackend>>,
    Json(request): Json<BackendRequest>,
) -> Result<Json<BackendResponse>, StatusCode> {
    backend.respond(&request).map(|text| Json(BackendResponse { text })).map_err(|_| StatusCode::INTERNAL_SERVER_ERROR)
}

/// Serves `backend` at `POST /` (`GET /` answers the health probe) on an ephemeral port.
/// `delay` is applied before every generation.
pub async fn spawn_stub_backend(backend: MockBackend, delay: Duration) -> std::io::Result<SocketAddr> {
    let listener = TcpListener::bind(SocketAddr::from(([127, 0, 0, 1], 0))).await?;
    let addr = listener.local_addr()?;
    let app = Router::new()
        .route(
            "/",
            post(move |state, body| async move {
                tokio::time::sleep(delay).await;
                generate(state, body).await
            })
            .get(|| async { StatusCode::OK }),
        )
        .with_state(Arc::new(backend));
    tokio::spawn(async move {
        let _ = axum::serve(listener, app).await;
    });
    Ok(addr)
}
