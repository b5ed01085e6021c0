#![allow(dead_code)]

use std::net::SocketAddr;
use std::sync::Arc;

use chrono::{DateTime, Utc};
use compleval_core::gateway::{BackendConfig, Decoding, Gateway};
use compleval_core::telemetry::TelemetryStore;
use compleval_service::{spawn_server, AppState, ManualClock, RateLimiter};
use serde_json::{json, Value};

pub struct TestServer {
    pub addr: SocketAddr,
    pub state: Arc<AppState>,
    pub clock: Arc<ManualClock>,
    pub client: reqwest::Client,
    _dir: tempfile::TempDir,
}

pub struct Options {
    pub backends: Vec<(&'static str, String)>,
    pub rate_limit: usize,
    pub smart_invocation: bool,
    pub shuffle_seed: Option<u64>,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            backends: vec![
                ("alpha", "mock://constant?text=foo(a)".into()),
                ("beta", "mock://constant?text=bar(b)".into()),
                ("gamma", "mock://constant?text=baz(c)".into()),
            ],
            rate_limit: 1000,
            smart_invocation: false,
            shuffle_seed: None,
        }
    }
}

pub fn start_time() -> DateTime<Utc> {
    "2023-07-01T12:00:00Z".parse().unwrap()
}

impl TestServer {
    pub async fn start(options: Options) -> TestServer {
        let dir = tempfile::tempdir().unwrap();
        let configs = options
            .backends
            .iter()
            .map(|(id, url)| BackendConfig::new(*id, url.parse().unwrap(), Decoding::BeamWidth(1)).with_timeout_ms(1000))
            .collect();
        let clock = Arc::new(ManualClock::new(start_time()));
        let state = Arc::new(AppState {
            gateway: Gateway::from_configs(configs).unwrap(),
            store: Arc::new(TelemetryStore::open(dir.path().join("telemetry.jsonl")).unwrap()),
            limiter: RateLimiter::new(options.rate_limit),
            clock: clock.clone(),
            smart_invocation: options.smart_invocation,
            shuffle_seed: options.shuffle_seed,
        });
        let addr = spawn_server(state.clone(), "127.0.0.1:0".parse().unwrap()).await.unwrap();
        TestServer { addr, state, clock, client: reqwest::Client::new(), _dir: dir }
    }

    pub fn url(&self, path: &str) -> String {
        format!("http://{}{}", self.addr, path)
    }

    pub async fn post(&self, path: &str, body: &Value) -> (u16, Value) {
        self.post_raw(path, serde_json::to_vec(body).unwrap()).await
    }

    pub async fn post_raw(&self, path: &str, body: Vec<u8>) -> (u16, Value) {
        let response = self
            .client
            .post(self.url(path))
            .header("content-type", "application/json")
            .body(body)
            .send()
            .await
            .unwrap();
        let status = response.status().as_u16();
        (status, response.json().await.unwrap_or(Value::Null))
    }
}

pub fn completion_body(user: &str, left: &str, right: &str) -> Value {
    json!({
        "user_token": user,
        "ide": "vscode",
        "plugin_version": "1.2.0",
        "language": "python",
        "left_context": left,
        "right_context": right,
        "trigger_kind": "auto",
        "store_context": false,
    })
}
