use std::path::PathBuf;
use std::sync::Arc;

use anyhow::Context;
use clap::Parser;
use compleval_service::{router, AppState, ServiceConfig, SystemClock};
use tracing_subscriber::EnvFilter;

/// Serve line completions from the configured model backends and record telemetry.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    /// TOML configuration file; `COMPLEVAL_*` environment variables override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt().with_env_filter(EnvFilter::from_default_env().add_directive("info".parse()?)).init();
    let args = Args::parse();
    let mut config = match &args.config {
        Some(path) => ServiceConfig::load(path)?,
        None => ServiceConfig::default(),
    };
    config.apply_env(std::env::vars())?;
    let state = AppState::from_config(&config, Arc::new(SystemClock)).context("building service state")?;
    tracing::info!(records = state.store.len(), path = %config.telemetry_path.display(), "telemetry store opened");

    let listener = tokio::net::TcpListener::bind(config.bind).await.with_context(|| format!("binding {}", config.bind))?;
    tracing::info!(addr = %listener.local_addr()?, backends = ?state.gateway, "listening");
    axum::serve(listener, router(Arc::new(state)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
