use std::collections::HashMap;
use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use url::Url;

use super::Decoding;

/// Request body sent to a model backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendRequest {
    pub left_context: String,
    pub right_context: String,
    pub max_new_tokens: u32,
    pub decoding: Decoding,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendResponse {
    pub text: String,
}

#[derive(Debug, thiserror::Error)]
pub enum BackendError {
    #[error("request failed: {0}")]
    Transport(#[from] reqwest::Error),
    #[error("backend answered with status {0}")]
    Status(u16),
    #[error("backend configured to fail")]
    Injected,
}

#[async_trait]
pub trait Backend: Send + Sync {
    /// Raw generated text; truncation to one line happens in the gateway.
    async fn generate(&self, request: &BackendRequest) -> Result<String, BackendError>;

    async fn probe(&self) -> bool;
}

/// A model served over HTTP: `POST <endpoint>` with a [`BackendRequest`] body, answering
/// `{"text": ...}`.
#[derive(Debug, Clone)]
pub struct HttpBackend {
    client: reqwest::Client,
    endpoint: Url,
}

impl HttpBackend {
    pub fn new(endpoint: Url) -> Self {
        HttpBackend { client: reqwest::Client::new(), endpoint }
    }
}

#[async_trait]
impl Backend for HttpBackend {
    async fn generate(&self, request: &BackendRequest) -> Result<String, BackendError> {
        let response = self.client.post(self.endpoint.clone()).json(request).send().await?;
        if !response.status().is_success() {
            return Err(BackendError::Status(response.status().as_u16()));
        }
        Ok(response.json::<BackendResponse>().await?.text)
    }

    async fn probe(&self) -> bool {
        self.client
            .get(self.endpoint.clone())
            .timeout(Duration::from_secs(1))
            .send()
            .await
            .is_ok()
    }
}

/// What a [`MockBackend`] produces for a request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MockBehavior {
    Constant(String),
    /// The cursor line of the left context, leading whitespace removed.
    EchoLeftLine,
    /// The right context up to the end of its first line.
    EchoRightLine,
    /// Exact `(left_context, right_context)` lookup; unknown contexts produce an empty string.
    Lookup(HashMap<(String, String), String>),
    Empty,
    Fail,
}

/// Deterministic in-process backend for tests and demos.
#[derive(Debug, Clone)]
pub struct MockBackend {
    behavior: MockBehavior,
    delay: Duration,
}

impl MockBackend {
    pub fn new(behavior: MockBehavior) -> Self {
        MockBackend { behavior, delay: Duration::ZERO }
    }

    pub fn constant(text: impl Into<String>) -> Self {
        Self::new(MockBehavior::Constant(text.into()))
    }

    pub fn with_delay(mut self, delay: Duration) -> Self {
        self.delay = delay;
        self
    }

    /// Parses `mock://<behavior>[?text=..&delay_ms=..]`, where behavior is one of
    /// `constant`, `echo-left`, `echo-right`, `empty` or `fail`.
    pub fn from_url(url: &Url) -> Option<Self> {
        let query: HashMap<String, String> = url.query_pairs().into_owned().collect();
        let behavior = match url.host_str()? {
            "constant" => MockBehavior::Constant(query.get("text").cloned().unwrap_or_default()),
            "echo-left" => MockBehavior::EchoLeftLine,
            "echo-right" => MockBehavior::EchoRightLine,
            "empty" => MockBehavior::Empty,
            "fail" => MockBehavior::Fail,
            _ => return None,
        };
        let delay = match query.get("delay_ms") {
            Some(ms) => Duration::from_millis(ms.parse().ok()?),
            None => Duration::ZERO,
        };
        Some(MockBackend { behavior, delay })
    }

    pub fn respond(&self, request: &BackendRequest) -> Result<String, BackendError> {
        Ok(match &self.behavior {
            MockBehavior::Constant(text) => text.clone(),
            MockBehavior::EchoLeftLine => {
                let line = request.left_context.rsplit('\n').next().unwrap_or_default();
                line.trim_start().to_string()
            }
            MockBehavior::EchoRightLine => request.right_context.split('\n').next().unwrap_or_default().to_string(),
            MockBehavior::Lookup(table) => table
                .get(&(request.left_context.clone(), request.right_context.clone()))
                .cloned()
                .unwrap_or_default(),
            MockBehavior::Empty => String::new(),
            MockBehavior::Fail => return Err(BackendError::Injected),
        })
    }
}

#[async_trait]
impl Backend for MockBackend {
    async fn generate(&self, request: &BackendRequest) -> Result<String, BackendError> {
        if !self.delay.is_zero() {
            tokio::time::sleep(self.delay).await;
        }
        self.respond(request)
    }

    async fn probe(&self) -> bool {
        self.behavior != MockBehavior::Fail
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn request(left: &str, right: &str) -> BackendRequest {
        BackendRequest {
            left_context: left.into(),
            right_context: right.into(),
            max_new_tokens: 16,
            decoding: Decoding::BeamWidth(1),
        }
    }

    #[test]
    fn mock_urls() {
        let m = MockBackend::from_url(&"mock://constant?text=foo()&delay_ms=100".parse().unwrap()).unwrap();
        assert_eq!(m.behavior, MockBehavior::Constant("foo()".into()));
        assert_eq!(m.delay, Duration::from_millis(100));
        assert!(MockBackend::from_url(&"mock://echo-left".parse().unwrap()).is_some());
        assert!(MockBackend::from_url(&"mock://nonsense".parse().unwrap()).is_none());
        assert!(MockBackend::from_url(&"mock://empty?delay_ms=x".parse().unwrap()).is_none());
    }

    #[test]
    fn mock_behaviors() {
        let r = request("def f():\n    return x", ")\nmore");
        assert_eq!(MockBackend::new(MockBehavior::EchoLeftLine).respond(&r).unwrap(), "return x");
        assert_eq!(MockBackend::new(MockBehavior::EchoRightLine).respond(&r).unwrap(), ")");
        assert_eq!(MockBackend::new(MockBehavior::Empty).respond(&r).unwrap(), "");
        assert!(MockBackend::new(MockBehavior::Fail).respond(&r).is_err());
        let table = HashMap::from([((r.left_context.clone(), r.right_context.clone()), "hit".to_string())]);
        assert_eq!(MockBackend::new(MockBehavior::Lookup(table.clone())).respond(&r).unwrap(), "hit");
        assert_eq!(MockBackend::new(MockBehavior::Lookup(table)).respond(&request("x", "")).unwrap(), "");
    }

    #[test]
    fn wire_format() {
        let body = serde_json::to_value(request("a", "b")).unwrap();
        assert_eq!(
            body,
            serde_json::json!({"left_context": "a", "right_context": "b", "max_new_tokens": 16, "decoding": {"beam_width": 1}})
        );
        let mut r = request("a", "b");
        r.decoding = Decoding::TopP(0.95);
        assert_eq!(serde_json::to_value(r).unwrap()["decoding"], serde_json::json!({"top_p": 0.95}));
    }
}
