mod common;

use std::collections::BTreeSet;
use std::time::Duration;

use chrono::TimeDelta;
use common::{completion_body, Options, TestServer};
use compleval_core::gateway::{BackendConfig, Decoding, Gateway, MockBackend, MockBehavior};
use compleval_core::telemetry::{validity, InvalidReason, InvocationKind};
use compleval_service::backend_stub::spawn_stub_backend;
use serde_json::{json, Value};

fn suggestion_texts(body: &Value) -> Vec<String> {
    body["suggestions"].as_array().unwrap().iter().map(|s| s["text"].as_str().unwrap().to_string()).collect()
}

#[tokio::test]
async fn completion_and_feedback_round_trip() {
    let server = TestServer::start(Options::default()).await;
    let (status, body) = server.post("/api/v1/completion", &completion_body("u1", "import os\nx = ", "\nprint(x)")).await;
    assert_eq!(status, 200, "{body}");
    let request_id = body["request_id"].as_str().unwrap().to_string();
    let texts: BTreeSet<String> = suggestion_texts(&body).into_iter().collect();
    assert_eq!(texts, BTreeSet::from(["foo(a)".into(), "bar(b)".into(), "baz(c)".into()]));
    for s in body["suggestions"].as_array().unwrap() {
        assert!(s["model_id"].is_string());
    }

    let record = server.state.store.get(&request_id).unwrap();
    assert_eq!(record.detected_trigger.as_deref(), Some("="));
    assert_eq!(record.language, "python");
    assert_eq!(record.predictions.len(), 3);
    assert_eq!((record.left_len_chars, record.right_len_chars), (14, 9));
    assert!(record.left_context.is_none() && record.right_context.is_none());
    assert_eq!(record.trigger_kind, InvocationKind::Automatic);
    assert_eq!(record.plugin_version, "1.2.0");
    assert_eq!(record.server_timestamp, common::start_time());
    let journal = std::fs::read_to_string(server.state.store.path()).unwrap();
    assert!(!journal.contains("import os"), "context text leaked into the journal");

    server.clock.advance(TimeDelta::seconds(30));
    let feedback = json!({"request_id": request_id, "chosen_text": "bar(b)", "ground_truth_line": "x = bar(b)"});
    let (status, body) = server.post("/api/v1/feedback", &feedback).await;
    assert_eq!((status, body), (200, json!({})));
    let record = server.state.store.get(&request_id).unwrap();
    assert!(record.accepted);
    assert_eq!(record.ground_truth_remainder.as_deref(), Some("bar(b)"));
    assert_eq!(record.feedback_timestamp, Some(common::start_time() + TimeDelta::seconds(30)));
    assert!(validity(&record).valid);

    // Last write wins.
    let feedback = json!({"request_id": request_id, "ground_truth_line": "x = qux"});
    assert_eq!(server.post("/api/v1/feedback", &feedback).await.0, 200);
    let record = server.state.store.get(&request_id).unwrap();
    assert!(!record.accepted);
    assert_eq!(record.chosen_text, None);
    assert_eq!(record.ground_truth_remainder.as_deref(), Some("qux"));
}

#[tokio::test]
async fn stored_context_is_verbatim() {
    let server = TestServer::start(Options::default()).await;
    let mut body = completion_body("u", "def f():\n    return ", "\n");
    body["store_context"] = json!(true);
    body["trigger_kind"] = json!("manual");
    let (_, response) = server.post("/api/v1/completion", &body).await;
    let record = server.state.store.get(response["request_id"].as_str().unwrap()).unwrap();
    assert_eq!(record.left_context.as_deref(), Some("def f():\n    return "));
    assert_eq!(record.left_len_chars, record.left_context.unwrap().chars().count());
    assert_eq!(record.trigger_kind, InvocationKind::Manual);
    assert_eq!(record.detected_trigger.as_deref(), Some("return"));
}

#[tokio::test]
async fn invalid_requests_name_the_field() {
    let server = TestServer::start(Options::default()).await;
    for field in ["user_token", "ide", "plugin_version", "language", "left_context", "right_context", "trigger_kind"] {
        let mut body = completion_body("u", "x = ", "");
        body.as_object_mut().unwrap().remove(field);
        let (status, response) = server.post("/api/v1/completion", &body).await;
        assert_eq!(status, 400);
        assert_eq!(response["field"], field);
        assert!(response["error"].is_string());
    }
    let mut body = completion_body("u", "x = ", "");
    body["trigger_kind"] = json!("sometimes");
    assert_eq!(server.post("/api/v1/completion", &body).await.1["field"], "trigger_kind");
    body["trigger_kind"] = json!("auto");
    body["store_context"] = json!("yes");
    assert_eq!(server.post("/api/v1/completion", &body).await.1["field"], "store_context");
    body["store_context"] = json!(false);
    body["user_token"] = json!("");
    assert_eq!(server.post("/api/v1/completion", &body).await.1["field"], "user_token");

    let (status, response) = server.post_raw("/api/v1/completion", b"{not json".to_vec()).await;
    assert_eq!(status, 400);
    assert!(response["error"].as_str().unwrap().contains("malformed"));
    assert_eq!(server.post("/api/v1/feedback", &json!({"request_id": "x"})).await.1["field"], "ground_truth_line");
    assert_eq!(server.state.store.len(), 0);
}

#[tokio::test]
async fn unknown_feedback_id_is_404() {
    let server = TestServer::start(Options::default()).await;
    let (status, body) =
        server.post("/api/v1/feedback", &json!({"request_id": "bogus", "ground_truth_line": "x"})).await;
    assert_eq!((status, body), (404, json!({})));
}

#[tokio::test]
async fn rate_limit_returns_retry_after() {
    let server = TestServer::start(Options { rate_limit: 3, ..Options::default() }).await;
    for _ in 0..3 {
        assert_eq!(server.post("/api/v1/completion", &completion_body("u", "x = ", "")).await.0, 200);
        server.clock.advance(TimeDelta::seconds(1));
    }
    let response = server
        .client
        .post(server.url("/api/v1/completion"))
        .json(&completion_body("u", "x = ", ""))
        .send()
        .await
        .unwrap();
    assert_eq!(response.status().as_u16(), 429);
    assert_eq!(response.headers()["retry-after"], "3597");
    assert_eq!(response.json::<Value>().await.unwrap(), json!({"retry_after_s": 3597}));
    assert_eq!(server.post("/api/v1/completion", &completion_body("other", "x = ", "")).await.0, 200);
    server.clock.advance(TimeDelta::seconds(3598));
    assert_eq!(server.post("/api/v1/completion", &completion_body("u", "x = ", "")).await.0, 200);
    assert_eq!(server.state.store.len(), 5);
}

#[tokio::test]
async fn concurrent_hammering_admits_exactly_the_limit() {
    let server = TestServer::start(Options { rate_limit: 25, ..Options::default() }).await;
    let body = completion_body("hammer", "x = ", "");
    let calls = (0..80).map(|_| server.post("/api/v1/completion", &body));
    let statuses: Vec<u16> = futures::future::join_all(calls).await.into_iter().map(|(s, _)| s).collect();
    assert_eq!(statuses.iter().filter(|&&s| s == 200).count(), 25);
    assert_eq!(statuses.iter().filter(|&&s| s == 429).count(), 55);
    assert_eq!(server.state.store.len(), 25);
}

#[tokio::test]
async fn smart_invocation_suppresses_mid_token_requests() {
    let server = TestServer::start(Options { smart_invocation: true, ..Options::default() }).await;
    let (status, body) = server.post("/api/v1/completion", &completion_body("u", "for c in alphebt", "\n")).await;
    assert_eq!(status, 200);
    assert_eq!(body["suggestions"], json!([]));
    let record = server.state.store.get(body["request_id"].as_str().unwrap()).unwrap();
    assert!(record.suppressed && record.predictions.is_empty());

    let mut manual = completion_body("u", "for c in alphebt", "\n");
    manual["trigger_kind"] = json!("manual");
    let (_, body) = server.post("/api/v1/completion", &manual).await;
    assert_eq!(suggestion_texts(&body).len(), 3);

    let off = TestServer::start(Options::default()).await;
    let (_, body) = off.post("/api/v1/completion", &completion_body("u", "for c in alphebt", "\n")).await;
    assert_eq!(suggestion_texts(&body).len(), 3);
}

#[tokio::test]
async fn duplicates_and_failures_are_hidden() {
    let options = Options {
        backends: vec![
            ("a", "mock://constant?text=same".into()),
            ("b", "mock://constant?text=same".into()),
            ("c", "mock://fail".into()),
            ("d", "mock://empty".into()),
        ],
        ..Options::default()
    };
    let server = TestServer::start(options).await;
    let (_, body) = server.post("/api/v1/completion", &completion_body("u", "x = ", "")).await;
    assert_eq!(body["suggestions"], json!([{"text": "same", "model_id": "a"}]));
    let record = server.state.store.get(body["request_id"].as_str().unwrap()).unwrap();
    assert_eq!(record.predictions.iter().filter(|p| p.failed).count(), 1);

    let feedback = json!({"request_id": record.request_id, "ground_truth_line": "x = "});
    server.post("/api/v1/feedback", &feedback).await;
    let record = server.state.store.get(&record.request_id).unwrap();
    assert_eq!(validity(&record).reason, InvalidReason::EmptyGroundTruth);
}

#[tokio::test]
async fn request_ids_are_unique_and_each_maps_to_one_record() {
    let server = TestServer::start(Options::default()).await;
    let mut ids = BTreeSet::new();
    for i in 0..200 {
        let (status, body) = server.post("/api/v1/completion", &completion_body(&format!("u{i}"), "a.", "")).await;
        assert_eq!(status, 200);
        let id = body["request_id"].as_str().unwrap().to_string();
        let record = server.state.store.get(&id).unwrap();
        for text in suggestion_texts(&body) {
            assert!(record.predictions.iter().any(|p| p.text == text));
        }
        ids.insert(id);
    }
    assert_eq!(ids.len(), 200);
    assert_eq!(server.state.store.len(), 200);
}

#[tokio::test]
async fn health_reports_backends() {
    let options = Options {
        backends: vec![("ok", "mock://echo-left".into()), ("down", "mock://fail".into())],
        ..Options::default()
    };
    let server = TestServer::start(options).await;
    let body: Value = server.client.get(server.url("/health")).send().await.unwrap().json().await.unwrap();
    assert_eq!(
        body,
        json!({"status": "ok", "backends": [{"model_id": "ok", "reachable": true}, {"model_id": "down", "reachable": false}]})
    );
}

#[tokio::test]
async fn shuffle_is_a_permutation_across_requests() {
    let server = TestServer::start(Options::default()).await;
    let mut orders = BTreeSet::new();
    for _ in 0..40 {
        let (_, body) = server.post("/api/v1/completion", &completion_body("u", "x = ", "")).await;
        let texts = suggestion_texts(&body);
        let mut sorted = texts.clone();
        sorted.sort();
        assert_eq!(sorted, ["bar(b)", "baz(c)", "foo(a)"]);
        orders.insert(texts);
    }
    assert!(orders.len() > 1, "suggestion order never changed");
}

#[tokio::test]
async fn http_backend_against_stub_server() {
    let addr = spawn_stub_backend(MockBackend::new(MockBehavior::EchoRightLine), Duration::ZERO).await.unwrap();
    let slow = spawn_stub_backend(MockBackend::constant("late"), Duration::from_millis(400)).await.unwrap();
    let broken = spawn_stub_backend(MockBackend::new(MockBehavior::Fail), Duration::ZERO).await.unwrap();
    let config = |id: &str, addr: std::net::SocketAddr| {
        BackendConfig::new(id, format!("http://{addr}/").parse().unwrap(), Decoding::TopP(0.95)).with_timeout_ms(150)
    };
    let gateway =
        Gateway::from_configs(vec![config("echo", addr), config("slow", slow), config("broken", broken)]).unwrap();
    let predictions = gateway.request_completions("f(", "x)\nnext\n").await;
    assert_eq!(predictions[0].text, "x)");
    assert!(!predictions[0].failed);
    assert!(predictions[1].failed && predictions[1].text.is_empty());
    assert!(predictions[2].failed);
    let health = gateway.health().await;
    assert!(health.iter().all(|(_, up)| *up));

    let unreachable = Gateway::from_configs(vec![config("gone", "127.0.0.1:9".parse().unwrap())]).unwrap();
    assert_eq!(unreachable.health().await, vec![("gone".to_string(), false)]);
}
