//! Fan-out of one completion context to every configured model backend.

mod backend;

use std::collections::HashSet;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use url::Url;

pub use backend::{
    Backend, BackendError, BackendRequest, BackendResponse, HttpBackend, MockBackend, MockBehavior,
};

pub const DEFAULT_TIMEOUT_MS: u64 = 3000;
pub const DEFAULT_MAX_NEW_TOKENS: u32 = 64;

/// Decoding strategy forwarded to a backend. Greedy models use a beam width of 1;
/// sampling models use nucleus sampling with p = 0.95.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decoding {
    BeamWidth(u32),
    TopP(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub model_id: String,
    pub endpoint: Url,
    pub decoding: Decoding,
    #[serde(default = "default_max_new_tokens")]
    pub max_new_tokens: u32,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
}

fn default_max_new_tokens() -> u32 {
    DEFAULT_MAX_NEW_TOKENS
}

fn default_timeout_ms() -> u64 {
    DEFAULT_TIMEOUT_MS
}

impl BackendConfig {
    pub fn new(model_id: impl Into<String>, endpoint: Url, decoding: Decoding) -> Self {
        BackendConfig {
            model_id: model_id.into(),
            endpoint,
            decoding,
            max_new_tokens: DEFAULT_MAX_NEW_TOKENS,
            timeout_ms: DEFAULT_TIMEOUT_MS,
        }
    }

    pub fn with_timeout_ms(mut self, timeout_ms: u64) -> Self {
        self.timeout_ms = timeout_ms;
        self
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        let invalid = |msg: String| Err(GatewayError::InvalidConfig { model_id: self.model_id.clone(), msg });
        match self.decoding {
            Decoding::BeamWidth(0) => return invalid("beam_width must be at least 1".into()),
            Decoding::TopP(p) if !(p > 0.0 && p <= 1.0) => return invalid(format!("top_p {p} outside (0, 1]")),
            _ => {}
        }
        if self.timeout_ms == 0 {
            return invalid("timeout_ms must be positive".into());
        }
        if self.model_id.is_empty() {
            return invalid("model_id is empty".into());
        }
        Ok(())
    }
}

/// One backend's suggestion for a request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelPrediction {
    pub model_id: String,
    /// Single line; empty when `failed`.
    pub text: String,
    pub inference_time_ms: u64,
    pub failed: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error("backend {model_id}: {msg}")]
    InvalidConfig { model_id: String, msg: String },
    #[error("backend {model_id}: unsupported endpoint {endpoint}")]
    UnsupportedEndpoint { model_id: String, endpoint: Url },
    #[error("no backends configured")]
    NoBackends,
    #[error("duplicate model id {0}")]
    DuplicateModel(String),
}

/// Cuts generated text at the first newline and drops trailing carriage returns.
pub fn truncate_to_line(generated: &str) -> &str {
    generated.split('\n').next().unwrap_or_default().trim_end_matches('\r')
}

/// Drops failed and empty predictions, keeps the first prediction of each distinct text and
/// returns the survivors in uniformly random order.
pub fn dedup_and_shuffle(predictions: &[ModelPrediction], rng_seed: Option<u64>) -> Vec<ModelPrediction> {
    let mut seen = HashSet::new();
    let mut unique: Vec<ModelPrediction> = predictions
        .iter()
        .filter(|p| !p.failed && !p.text.is_empty())
        .filter(|p| seen.insert(p.text.as_str()))
        .cloned()
        .collect();
    match rng_seed {
        Some(seed) => unique.shuffle(&mut ChaCha8Rng::seed_from_u64(seed)),
        None => unique.shuffle(&mut rand::rng()),
    }
    unique
}

/// Configured backends, shareable across request handlers.
#[derive(Clone)]
pub struct Gateway {
    backends: Vec<(BackendConfig, Arc<dyn Backend>)>,
}

impl std::fmt::Debug for Gateway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.backends.iter().map(|(c, _)| &c.model_id)).finish()
    }
}

impl Gateway {
    /// Builds HTTP backends for `http(s)://` endpoints and in-process mocks for `mock://`.
    pub fn from_configs(configs: Vec<BackendConfig>) -> Result<Self, GatewayError> {
        let backends = configs
            .into_iter()
            .map(|config| {
                let backend: Arc<dyn Backend> = match config.endpoint.scheme() {
                    "http" | "https" => Arc::new(HttpBackend::new(config.endpoint.clone())),
                    "mock" => match MockBackend::from_url(&config.endpoint) {
                        Some(mock) => Arc::new(mock),
                        None => {
                            return Err(GatewayError::UnsupportedEndpoint {
                                model_id: config.model_id,
                                endpoint: config.endpoint,
                            })
                        }
                    },
                    _ => {
                        return Err(GatewayError::UnsupportedEndpoint {
                            model_id: config.model_id,
                            endpoint: config.endpoint,
                        })
                    }
                };
                Ok((config, backend))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::with_backends(backends)
    }

    pub fn with_backends(backends: Vec<(BackendConfig, Arc<dyn Backend>)>) -> Result<Self, GatewayError> {
        if backends.is_empty() {
            return Err(GatewayError::NoBackends);
        }
        let mut ids = HashSet::new();
        for (config, _) in &backends {
            config.validate()?;
            if !ids.insert(config.model_id.as_str()) {
                return Err(GatewayError::DuplicateModel(config.model_id.clone()));
            }
        }
        Ok(Gateway { backends })
    }

    pub fn configs(&self) -> impl Iterator<Item = &BackendConfig> {
        self.backends.iter().map(|(c, _)| c)
    }

    /// Queries every backend concurrently. A backend that errors or exceeds its timeout yields
    /// a failed prediction; the output follows configuration order.
    pub async fn request_completions(&self, left: &str, right: &str) -> Vec<ModelPrediction> {
        let calls = self.backends.iter().map(|(config, backend)| async move {
            let request = BackendRequest {
                left_context: left.to_string(),
                right_context: right.to_string(),
                max_new_tokens: config.max_new_tokens,
                decoding: config.decoding,
            };
            let started = Instant::now();
            let outcome =
                tokio::time::timeout(Duration::from_millis(config.timeout_ms), backend.generate(&request)).await;
            let inference_time_ms = started.elapsed().as_millis() as u64;
            let (text, failed) = match outcome {
                Ok(Ok(raw)) => (truncate_to_line(&raw).to_string(), false),
                Ok(Err(err)) => {
                    tracing::debug!(model = %config.model_id, %err, "backend failed");
                    (String::new(), true)
                }
                Err(_) => {
                    tracing::debug!(model = %config.model_id, timeout_ms = config.timeout_ms, "backend timed out");
                    (String::new(), true)
                }
            };
            ModelPrediction { model_id: config.model_id.clone(), text, inference_time_ms, failed }
        });
        futures::future::join_all(calls).await
    }

    /// `(model_id, reachable)` per backend, in configuration order.
    pub async fn health(&self) -> Vec<(String, bool)> {
        let probes = self
            .backends
            .iter()
            .map(|(config, backend)| async move { (config.model_id.clone(), backend.probe().await) });
        futures::future::join_all(probes).await
    }
}
