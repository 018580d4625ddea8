use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use serde_json::{json, Value};
use tower::ServiceExt;

use cobot_core::assets;
use cobot_core::scenarios::{RunConfig, TeachScript};
use cobot_core::sim::ScenarioDoc;
use cobot_service::{router, spawn, Engine, EventLog, ServiceOptions};

fn app(scene: &str, tick: Duration, buffer: usize) -> Router {
    let options = ServiceOptions {
        tick_interval: tick,
        event_buffer: buffer,
    };
    let engine = Engine::new(
        assets::default_chain(),
        &ScenarioDoc::parse(scene).unwrap(),
        &TeachScript::default(),
        1,
        1,
        RunConfig::default(),
        EventLog::new(options.event_buffer),
    )
    .unwrap();
    router(spawn(engine, &options))
}

fn fast() -> Router {
    app(assets::TASK1_SCENE, Duration::ZERO, 1 << 16)
}

async fn send(app: &Router, method: Method, uri: &str, body: &str) -> (StatusCode, String) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = axum::body::to_bytes(res.into_body(), usize::MAX).await.unwrap();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

async fn json_of(app: &Router, method: Method, uri: &str, body: &str) -> (StatusCode, Value) {
    let (status, text) = send(app, method, uri, body).await;
    (status, serde_json::from_str(&text).unwrap_or(Value::String(text)))
}

fn golden(name: &str, actual: &Value) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(format!("{name}.json"));
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, serde_json::to_string_pretty(actual).unwrap() + "\n").unwrap();
        return;
    }
    let text = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden file {}", path.display()));
    let expected: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(&expected, actual, "{name} drifted from its golden file");
}

/// Parses the `data:` lines of an SSE body; `GAP` markers come back as-is.
fn sse_events(body: &str) -> Vec<Value> {
    body.lines()
        .filter_map(|l| l.strip_prefix("data:"))
        .map(|d| serde_json::from_str(d.trim()).unwrap())
        .collect()
}

async fn load_reference(app: &Router, id: &str) {
    let r = assets::reference(id).unwrap();
    let (status, _) = send(app, Method::PUT, "/tree", r.tree).await;
    assert_eq!(status, StatusCode::OK);
    for s in TeachScript::parse(r.teach).unwrap().symbols {
        let (status, body) = send(app, Method::POST, "/teach", &serde_json::to_string(&s).unwrap()).await;
        assert_eq!(status, StatusCode::OK, "{body}");
    }
}

async fn wait_idle(app: &Router) -> Value {
    for _ in 0..20_000 {
        let (_, s) = json_of(app, Method::GET, "/status", "").await;
        if s["running"] == false {
            return s;
        }
        tokio::time::sleep(Duration::from_millis(1)).await;
    }
    panic!("run never finished");
}

async fn all_events(app: &Router) -> Vec<Value> {
    let (status, body) = send(app, Method::GET, "/events?follow=false", "").await;
    assert_eq!(status, StatusCode::OK);
    sse_events(&body)
}

fn board(events: &[Value]) -> BTreeMap<String, String> {
    events
        .iter()
        .filter(|e| e["kind"] == "NODE_STATUS")
        .map(|e| {
            (
                e["payload"]["node_id"].as_str().unwrap().to_string(),
                e["payload"]["status"].as_str().unwrap().to_string(),
            )
        })
        .collect()
}

#[tokio::test]
async fn idle_documents_match_golden_files() {
    let app = fast();
    let (status, world) = json_of(&app, Method::GET, "/world", "").await;
    assert_eq!(status, StatusCode::OK);
    golden("world", &world);
    let (_, registry) = json_of(&app, Method::GET, "/registry", "").await;
    golden("registry", &registry);
    let (_, status) = json_of(&app, Method::GET, "/status", "").await;
    golden("status", &status);
    let (status, snapshot) = json_of(&app, Method::POST, "/detect", "").await;
    assert_eq!(status, StatusCode::OK);
    golden("detect", &snapshot);
    let (_, query) = json_of(
        &app,
        Method::POST,
        "/query",
        r#"{"predicate":"class=node & region=RIGHT_OF@table_1"}"#,
    )
    .await;
    assert_eq!(query["holds"], true);
    golden("query", &query);
}

#[tokio::test]
async fn detection_classes_follow_the_scene() {
    let app = fast();
    let (_, snapshot) = json_of(&app, Method::POST, "/detect", "").await;
    let mut classes: Vec<&str> = snapshot["objects"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| o["class"].as_str().unwrap())
        .filter(|c| *c != "table")
        .collect();
    classes.sort();
    assert_eq!(classes, ["link", "node", "node"]);
    let (_, symbols) = json_of(&app, Method::GET, "/symbols", "").await;
    assert_eq!(symbols["objects"], snapshot["objects"]);
}

#[tokio::test]
async fn error_documents_match_golden_files() {
    let app = fast();
    let duplicate = json!({
        "id": "root", "kind": "SEQUENCE",
        "children": [
            {"id": "open", "kind": "LEAF", "operation": "OpenGripper"},
            {"id": "open", "kind": "LEAF", "operation": "CloseGripper"}
        ]
    });
    let (status, doc) = json_of(&app, Method::PUT, "/tree", &duplicate.to_string()).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(doc["code"], "TREE_PARSE_ERROR");
    assert_eq!(doc["node_id"], "open");
    golden("error_duplicate_id", &doc);

    let (status, doc) = json_of(&app, Method::POST, "/tree/run", r#"{"condition":1,"seed":1}"#).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    golden("error_no_tree", &doc);

    let (status, doc) = json_of(&app, Method::POST, "/tree/stop", "").await;
    assert_eq!(status, StatusCode::CONFLICT);
    golden("error_not_running", &doc);

    let (status, doc) = json_of(&app, Method::POST, "/tree/run", "{not json").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(doc["code"], "BAD_REQUEST");
}

#[tokio::test]
async fn out_of_profile_tree_is_rejected_with_the_node() {
    let app = fast();
    load_reference(&app, "task1_c4").await;
    let (status, doc) = json_of(&app, Method::POST, "/tree/run", r#"{"condition":1,"seed":1}"#).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(doc["code"], "INVALID_TREE");
    assert!(doc["node_id"].is_string());
    golden("error_invalid_tree", &doc);
    assert_eq!(json_of(&app, Method::GET, "/status", "").await.1["running"], false);
}

#[tokio::test]
#[allow(clippy::approx_constant)]
async fn taught_waypoint_is_listed() {
    let app = fast();
    let entry = json!({
        "name": "above_bin",
        "kind": "WAYPOINT",
        "pose": {"translation": [0.4, 0.1, 0.2], "rotation": [-0.7071068, 0.0, 0.7071068, 0.0]},
        "reference_frame": "world"
    });
    let (status, stored) = json_of(&app, Method::POST, "/teach", &entry.to_string()).await;
    assert_eq!(status, StatusCode::OK, "{stored}");
    let (_, symbols) = json_of(&app, Method::GET, "/symbols", "").await;
    let listed = symbols["symbols"].as_array().unwrap();
    assert!(listed
        .iter()
        .any(|s| s["name"] == "above_bin" && s["kind"] == "WAYPOINT"));
    golden("symbols", &symbols);
}

#[tokio::test]
async fn reference_run_streams_running_before_success() {
    let app = fast();
    load_reference(&app, "task1_c1").await;
    let (status, _) = json_of(&app, Method::POST, "/tree/run", r#"{"condition":1,"seed":1}"#).await;
    assert_eq!(status, StatusCode::OK);
    let done = wait_idle(&app).await;
    assert_eq!(done["outcome"], "SUCCESS");

    let events = all_events(&app).await;
    for (i, e) in events.iter().enumerate() {
        assert_eq!(e["seq"], i as u64, "sequence numbers are dense from zero");
    }
    let run_start = events
        .iter()
        .position(|e| e["payload"]["message"] == "run started")
        .unwrap();
    let mut seen_running = std::collections::HashSet::new();
    for e in &events[run_start..] {
        if e["kind"] != "NODE_STATUS" {
            continue;
        }
        let id = e["payload"]["node_id"].as_str().unwrap();
        match e["payload"]["status"].as_str().unwrap() {
            "RUNNING" => {
                seen_running.insert(id.to_string());
            }
            "SUCCESS" => assert!(seen_running.contains(id), "{id} succeeded without running first"),
            _ => {}
        }
    }
    let (_, world) = json_of(&app, Method::GET, "/world", "").await;
    let last_world = events.iter().rev().find(|e| e["kind"] == "WORLD_CHANGED").unwrap();
    assert_eq!(last_world["payload"]["objects"], world["objects"]);

    // replaying from zero rebuilds the board the service reports
    let (_, live) = json_of(&app, Method::GET, "/tree/status", "").await;
    let live: BTreeMap<String, String> = live
        .as_array()
        .unwrap()
        .iter()
        .map(|e| {
            (
                e["node_id"].as_str().unwrap().to_string(),
                e["status"].as_str().unwrap().to_string(),
            )
        })
        .collect();
    assert_eq!(board(&events), live);
    assert!(live.values().all(|s| s == "SUCCESS"));

    // a client resuming mid-log sees exactly the tail
    let (_, tail) = send(
        &app,
        Method::GET,
        &format!("/events?follow=false&since={}", run_start),
        "",
    )
    .await;
    assert_eq!(sse_events(&tail), events[run_start..].to_vec());
}

#[tokio::test]
async fn tree_is_frozen_while_running() {
    let app = app(assets::TASK1_SCENE, Duration::from_millis(2), 1 << 16);
    load_reference(&app, "task1_c1").await;
    let (_, before) = send(&app, Method::GET, "/tree", "").await;
    let (status, _) = send(&app, Method::POST, "/tree/run", r#"{"condition":1,"seed":1}"#).await;
    assert_eq!(status, StatusCode::OK);
    let replacement = json!({
        "id": "other", "kind": "SEQUENCE",
        "children": [{"id": "open", "kind": "LEAF", "operation": "OpenGripper"}]
    })
    .to_string();
    let hammer: Vec<_> = (0..64)
        .map(|_| {
            let app = app.clone();
            let body = replacement.clone();
            tokio::spawn(async move { json_of(&app, Method::PUT, "/tree", &body).await })
        })
        .collect();
    for h in hammer {
        let (status, doc) = h.await.unwrap();
        assert_eq!(status, StatusCode::CONFLICT);
        assert_eq!(doc["code"], "TREE_RUNNING");
    }
    let (status, doc) = json_of(&app, Method::POST, "/tree/run", r#"{"condition":1,"seed":2}"#).await;
    assert_eq!(status, StatusCode::CONFLICT);
    golden("error_conflict", &doc);
    let (status, _) = send(&app, Method::POST, "/tree/stop", "").await;
    assert_eq!(status, StatusCode::OK);
    let done = wait_idle(&app).await;
    assert_eq!(done["outcome"], "STOPPED");
    let (_, after) = send(&app, Method::GET, "/tree", "").await;
    assert_eq!(before, after);
}

#[tokio::test]
async fn stop_lets_the_current_leaf_finish() {
    let app = app(assets::TASK1_SCENE, Duration::from_millis(1), 1 << 16);
    load_reference(&app, "task1_c1").await;
    send(&app, Method::POST, "/tree/run", r#"{"condition":1,"seed":1}"#).await;
    // wait for the first leaf to finish, then stop during a later one
    loop {
        let (_, b) = json_of(&app, Method::GET, "/tree/status", "").await;
        if b.as_array().unwrap().iter().any(|e| e["status"] == "SUCCESS") {
            break;
        }
        tokio::time::sleep(Duration::from_millis(1)).await;
    }
    send(&app, Method::POST, "/tree/stop", "").await;
    assert_eq!(wait_idle(&app).await["outcome"], "STOPPED");
    let events = all_events(&app).await;
    let (_, live) = json_of(&app, Method::GET, "/tree/status", "").await;
    let statuses: Vec<&str> = live
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["status"].as_str().unwrap())
        .collect();
    assert!(statuses.contains(&"SUCCESS"));
    assert!(
        statuses.contains(&"IDLE"),
        "stopping early leaves later nodes untouched"
    );
    assert!(!statuses.contains(&"FAILURE"));
    // no leaf is left mid-execution
    let tree = cobot_core::bt::document::parse_tree(assets::reference("task1_c1").unwrap().tree).unwrap();
    let b = board(&events);
    for leaf in tree
        .walk()
        .into_iter()
        .filter(|n| n.kind == cobot_core::bt::NodeKind::Leaf)
    {
        assert_ne!(b.get(&leaf.id).map(String::as_str), Some("RUNNING"), "{}", leaf.id);
    }
}

#[tokio::test]
async fn slow_subscriber_gets_a_gap_marker() {
    let app = app(assets::TASK1_SCENE, Duration::ZERO, 4);
    load_reference(&app, "task1_c1").await;
    // the handler subscribes immediately; the body is only read after the run
    let req = Request::builder().uri("/events").body(Body::empty()).unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    send(&app, Method::POST, "/tree/run", r#"{"condition":1,"seed":1}"#).await;
    wait_idle(&app).await;
    let bytes = axum::body::to_bytes(res.into_body(), usize::MAX).await.unwrap();
    let text = String::from_utf8(bytes.to_vec()).unwrap();
    assert!(text.contains("event: GAP"), "{text}");
    let gap = sse_events(&text).pop().unwrap();
    assert!(gap["missed"].as_u64().unwrap() > 0);
    assert!(gap["resume_from"].is_u64());
}
