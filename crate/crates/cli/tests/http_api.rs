use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use forge_cli::server::router;
use forge_core::cvbench::{QuestionItem, Source, Status, Task};
use forge_core::review::{DecisionJournal, ReviewStore};

fn items(n: usize) -> Vec<QuestionItem> {
    (0..n)
        .map(|i| QuestionItem {
            id: format!("item-{i:04}"),
            scene_id: format!("scene-{i}"),
            source: if i % 2 == 0 { Source::Coco } else { Source::Omni3d },
            task: if i % 2 == 0 { Task::ObjectCount } else { Task::DepthOrder },
            prompt: format!("How many things in image {i}?"),
            choices: vec!["0".into(), "1".into(), "2".into()],
            answer_index: 1,
            overlays: vec![],
            status: Status::Pending,
            edited_answer: None,
        })
        .collect()
}

fn app(n: usize) -> Router {
    router(Arc::new(ReviewStore::in_memory(items(n)).unwrap()))
}

async fn call(app: &Router, req: Request<Body>) -> (StatusCode, Value) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

fn get(uri: &str) -> Request<Body> {
    Request::get(uri).body(Body::empty()).unwrap()
}

fn decide(id: &str, reviewer: Option<&str>, body: Value) -> Request<Body> {
    let mut b = Request::post(format!("/items/{id}/decision")).header("content-type", "application/json");
    if let Some(r) = reviewer {
        b = b.header("X-Reviewer", r);
    }
    b.body(Body::from(body.to_string())).unwrap()
}

#[tokio::test]
async fn list_pages_and_filters() {
    let app = app(250);
    let (s, v) = call(&app, get("/items?status=pending&page=3&size=100")).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!((v["pages"].as_u64(), v["items"].as_array().unwrap().len()), (Some(3), 50));
    assert_eq!(v["items"][0]["id"], "item-0200");
    assert_eq!(v["items"][0]["status"], "pending");

    let (s, v) = call(&app, get("/items?page=0")).await;
    assert_eq!((s, v["error"].as_str()), (StatusCode::BAD_REQUEST, Some("bad_request")));
    let (s, _) = call(&app, get("/items?status=maybe")).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, _) = call(&app, get("/items?size=abc")).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn decision_flow_and_errors() {
    let app = app(4);
    let (s, v) = call(&app, decide("item-0000", Some("ana"), json!({"decision": "accepted"}))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["status"], "accepted");

    let (_, v) = call(&app, get("/stats")).await;
    assert_eq!((v["pending"].as_u64(), v["accepted"].as_u64()), (Some(3), Some(1)));

    let (s, _) = call(&app, decide("item-0001", None, json!({"decision": "accepted"}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, v) = call(&app, decide("nope", Some("ana"), json!({"decision": "accepted"}))).await;
    assert_eq!((s, v["error"].as_str()), (StatusCode::NOT_FOUND, Some("not_found")));
    let (s, _) = call(&app, decide("item-0001", Some("ana"), json!({"decision": "modified"}))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let (s, _) = call(&app, decide("item-0001", Some("ana"), json!({"decision": "whatever"}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);

    // Latest decision wins.
    call(&app, decide("item-0000", Some("ana"), json!({"decision": "rejected"}))).await;
    let (_, v) = call(&app, get("/items?status=rejected")).await;
    assert_eq!(v["items"][0]["id"], "item-0000");
}

#[tokio::test]
async fn export_requires_decisions_and_applies_edits() {
    let app = app(3);
    call(&app, decide("item-0000", Some("r"), json!({"decision": "accepted"}))).await;
    let (s, v) = call(&app, get("/export")).await;
    assert_eq!((s, v["error"].as_str()), (StatusCode::CONFLICT, Some("pending")));
    let (s, v) = call(&app, get("/export?allow_pending=true")).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["items"].as_array().unwrap().len(), 1);

    let edit = json!({"decision": "modified", "edited_answer": 2});
    call(&app, decide("item-0001", Some("r"), edit)).await;
    call(&app, decide("item-0002", Some("r"), json!({"decision": "rejected"}))).await;
    let (s, v) = call(&app, get("/export")).await;
    assert_eq!(s, StatusCode::OK);
    let exported = v["items"].as_array().unwrap();
    assert_eq!(exported.len(), 2);
    assert_eq!(exported[1]["answer_index"], 2);
    assert_eq!(exported[1]["status"], "modified");
    assert_eq!(v["composition"]["total"], 2);
    assert!(v["summary"].as_str().unwrap().contains("Depth Order"));
}

#[tokio::test]
async fn idempotency_header_dedups() {
    let app = app(1);
    let req = || {
        Request::post("/items/item-0000/decision")
            .header("content-type", "application/json")
            .header("X-Reviewer", "r")
            .header("Idempotency-Key", "sess-1:7")
            .body(Body::from(r#"{"decision":"accepted"}"#))
            .unwrap()
    };
    let (_, first) = call(&app, req()).await;
    let (_, second) = call(&app, req()).await;
    assert_eq!((first["duplicate"].as_bool(), second["duplicate"].as_bool()), (Some(false), Some(true)));
    let (_, v) = call(&app, get("/stats")).await;
    assert_eq!(v["journal_entries"], 1);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_submissions_lose_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("journal.jsonl");
    let (journal, prior) = DecisionJournal::open(&path).unwrap();
    let store = Arc::new(ReviewStore::new(items(200), prior, journal).unwrap());
    let app = router(store);
    let mut tasks = Vec::new();
    for i in 0..200 {
        let app = app.clone();
        tasks.push(tokio::spawn(async move {
            let d = if i % 3 == 0 { "rejected" } else { "accepted" };
            let (s, _) = call(&app, decide(&format!("item-{i:04}"), Some("load"), json!({"decision": d}))).await;
            assert_eq!(s, StatusCode::OK);
        }));
    }
    for t in tasks {
        t.await.unwrap();
    }
    let (_, v) = call(&app, get("/stats")).await;
    assert_eq!((v["journal_entries"].as_u64(), v["pending"].as_u64()), (Some(200), Some(0)));
    assert_eq!(DecisionJournal::load(&path).unwrap().len(), 200);
}
