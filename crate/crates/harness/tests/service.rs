//! Trial service endpoints, driven in-process.

use std::path::Path;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use conceptprobe::dataset::{materialize, write_dataset, Dataset, Item, Recipe, Split};
use conceptprobe::report::EvalReport;
use conceptprobe::service::{router, AppState, ServiceConfig, HUMAN_REFERENCE_ACCURACY};
use conceptprobe_core::arc::concepts::FamilyId;
use conceptprobe_core::raven::suites::probe_specs;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use tower::ServiceExt;

struct Fixture {
    _dir: tempfile::TempDir,
    config: ServiceConfig,
    pair: Dataset,
    arc: Dataset,
}

fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let suites = dir.path().join("suites");
    let pair = materialize(
        Split::Probe,
        31,
        Recipe::Raven { specs: probe_specs()[..2].to_vec(), offset: 0, count: 2, image_side: None },
    )
    .unwrap();
    let arc = materialize(Split::Probe, 31, Recipe::Arc { plan: vec![(FamilyId::TopStripeColor, 2)] }).unwrap();
    write_dataset(&suites.join("pair"), &pair).unwrap();
    write_dataset(&suites.join("arc"), &arc).unwrap();
    let config = ServiceConfig { suites_dir: suites, data_root: dir.path().join("data"), image_side: 48 };
    Fixture { _dir: dir, config, pair, arc }
}

fn public_id(item_id: &str) -> String {
    hex::encode(Sha256::digest(item_id.as_bytes()))[..16].to_string()
}

fn item_by_public<'a>(ds: &'a Dataset, pid: &str) -> &'a Item {
    ds.items.iter().find(|i| public_id(i.id()) == pid).expect("known public id")
}

async fn call(state: &Arc<AppState>, method: &str, uri: &str, body: Option<&str>) -> (StatusCode, Vec<u8>) {
    let mut req = Request::builder().method(method).uri(uri);
    if body.is_some() {
        req = req.header("content-type", "application/json");
    }
    let req = req.body(body.map(|b| Body::from(b.to_string())).unwrap_or_else(Body::empty)).unwrap();
    let resp = router(state.clone()).oneshot(req).await.unwrap();
    let status = resp.status();
    (status, axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap().to_vec())
}

async fn json_call(state: &Arc<AppState>, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let text = body.map(|b| b.to_string());
    let (status, bytes) = call(state, method, uri, text.as_deref()).await;
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

fn load(config: &ServiceConfig) -> Arc<AppState> {
    Arc::new(AppState::load(config.clone()).unwrap())
}

async fn create(state: &Arc<AppState>, suite: &str) -> String {
    let (status, v) = json_call(state, "POST", "/api/session", Some(json!({ "suite": suite }))).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    v["session_id"].as_str().unwrap().to_string()
}

fn raven_correct(ds: &Dataset, pid: &str) -> usize {
    match item_by_public(ds, pid) {
        Item::Raven(p) => p.correct_index,
        Item::Arc(_) => unreachable!(),
    }
}

fn assert_no_leak(bytes: &[u8]) {
    let text = String::from_utf8_lossy(bytes);
    for needle in ["concept", "correct", "sameness", "progression", "top-stripe", "ruleset", "seed"] {
        assert!(!text.contains(needle), "{needle} leaked: {text}");
    }
}

#[tokio::test]
async fn two_problem_session_scores_half() {
    let f = fixture();
    let state = load(&f.config);
    let (status, suites) = json_call(&state, "GET", "/api/suites", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(suites.as_array().unwrap().len(), 2);

    let (_, created) = json_call(&state, "POST", "/api/session", Some(json!({ "suite": "pair" }))).await;
    assert_eq!(created["n"], 2);
    let id = created["session_id"].as_str().unwrap().to_string();

    let (status, bytes) = call(&state, "GET", &format!("/api/session/{id}/next"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_no_leak(&bytes);
    let first: Value = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(first["domain"], "raven");
    assert_eq!(first["candidates"].as_array().unwrap().len(), 8);
    let pid1 = first["problem_id"].as_str().unwrap().to_string();
    let right = raven_correct(&f.pair, &pid1);

    let answer = |pid: &str, a: Value| json!({ "problem_id": pid, "answer": a });
    let url = format!("/api/session/{id}/answer");
    let (status, v) = json_call(&state, "POST", &url, Some(answer(&pid1, json!(right)))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v, json!({ "accepted": true, "remaining": 1 }));

    // A second submission is refused and does not overwrite the first.
    let (status, _) = json_call(&state, "POST", &url, Some(answer(&pid1, json!((right + 1) % 8)))).await;
    assert_eq!(status, StatusCode::CONFLICT);

    let (_, second) = json_call(&state, "GET", &format!("/api/session/{id}/next"), None).await;
    let pid2 = second["problem_id"].as_str().unwrap().to_string();
    assert_ne!(pid1, pid2);
    assert_eq!(second["remaining"], 1);
    for bad in [json!(8), json!("3"), json!(-1), json!([1])] {
        let (status, _) = json_call(&state, "POST", &url, Some(answer(&pid2, bad.clone()))).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{bad}");
    }
    let (status, _) = json_call(&state, "POST", &url, Some(answer("ffffffffffffffff", json!(0)))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = call(&state, "POST", &url, Some("{not json")).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let wrong = (raven_correct(&f.pair, &pid2) + 3) % 8;
    let (status, v) = json_call(&state, "POST", &url, Some(answer(&pid2, json!(wrong)))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["remaining"], 0);
    let (_, done) = json_call(&state, "GET", &format!("/api/session/{id}/next"), None).await;
    assert_eq!(done["done"], true);

    let (_, summary) = json_call(&state, "GET", &format!("/api/session/{id}/summary"), None).await;
    assert_eq!(summary["n"], 2);
    assert_eq!(summary["answered"], 2);
    assert_eq!(summary["correct"], 1.0);
    assert_eq!(summary["accuracy"], 0.5);
    assert_eq!(summary["reference"]["accuracy"], HUMAN_REFERENCE_ACCURACY);

    // The CSV export carries the same per-concept numbers as the summary.
    let (status, csv) = call(&state, "GET", &format!("/api/session/{id}/report.csv"), None).await;
    assert_eq!(status, StatusCode::OK);
    let report = EvalReport::from_csv(std::str::from_utf8(&csv).unwrap()).unwrap();
    assert_eq!(report.rows[0].accuracy, 0.5);
    let per = summary["per_concept"].as_array().unwrap();
    assert_eq!(per.len(), report.rows.len() - 1);
    for (p, row) in per.iter().zip(&report.rows[1..]) {
        assert_eq!(p["slice"], row.slice.as_str());
        assert_eq!(p["n"], row.n);
        assert_eq!(p["accuracy"].as_f64().unwrap(), row.accuracy);
    }
    // Per-concept slices recomputed from the dataset tags.
    let mut expected = std::collections::BTreeMap::<String, (usize, f64)>::new();
    for (item, e) in f.pair.items.iter().zip(&f.pair.manifest.entries) {
        let hit = if public_id(item.id()) == pid1 { 1.0 } else { 0.0 };
        for t in &e.concept_tags {
            let s = expected.entry(t.clone()).or_default();
            s.0 += 1;
            s.1 += hit;
        }
    }
    let got: std::collections::BTreeMap<String, (usize, f64)> = per
        .iter()
        .map(|p| (p["slice"].as_str().unwrap().to_string(), (p["n"].as_u64().unwrap() as usize, p["correct"].as_f64().unwrap())))
        .collect();
    assert_eq!(got, expected);
}

#[tokio::test]
async fn unknown_ids_are_not_found() {
    let f = fixture();
    let state = load(&f.config);
    for (method, uri) in [
        ("GET", "/api/session/nope/next"),
        ("GET", "/api/session/nope/summary"),
        ("GET", "/api/session/nope/report.csv"),
    ] {
        assert_eq!(call(&state, method, uri, None).await.0, StatusCode::NOT_FOUND, "{uri}");
    }
    let (status, _) =
        json_call(&state, "POST", "/api/session/nope/answer", Some(json!({ "problem_id": "x", "answer": 0 }))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = json_call(&state, "POST", "/api/session", Some(json!({ "suite": "missing" }))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = json_call(&state, "POST", "/api/session", Some(json!({ "name": "pair" }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn sessions_survive_restart() {
    let f = fixture();
    let state = load(&f.config);
    let id = create(&state, "pair").await;
    let (_, first) = json_call(&state, "GET", &format!("/api/session/{id}/next"), None).await;
    let pid1 = first["problem_id"].as_str().unwrap().to_string();
    let right = raven_correct(&f.pair, &pid1);
    let body = json!({ "problem_id": pid1, "answer": right });
    json_call(&state, "POST", &format!("/api/session/{id}/answer"), Some(body.clone())).await;
    let (_, before) = json_call(&state, "GET", &format!("/api/session/{id}/summary"), None).await;
    drop(state);

    let restarted = load(&f.config);
    let (_, after) = json_call(&restarted, "GET", &format!("/api/session/{id}/summary"), None).await;
    assert_eq!(before, after);
    assert_eq!(after["answered"], 1);
    let (_, next) = json_call(&restarted, "GET", &format!("/api/session/{id}/next"), None).await;
    assert_ne!(next["problem_id"], pid1.as_str());
    assert_eq!(next["remaining"], 1);
    let (status, _) = json_call(&restarted, "POST", &format!("/api/session/{id}/answer"), Some(body)).await;
    assert_eq!(status, StatusCode::CONFLICT);

    let journal = f.config.data_root.join("sessions").join(format!("{id}.jsonl"));
    let lines: Vec<Value> =
        std::fs::read_to_string(journal).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["event"], "created");
    assert_eq!(lines[1]["event"], "answer");
    assert_eq!(lines[1]["score"], 1.0);
}

#[tokio::test]
async fn images_are_served() {
    let f = fixture();
    let state = load(&f.config);
    let id = create(&state, "pair").await;
    let (_, next) = json_call(&state, "GET", &format!("/api/session/{id}/next"), None).await;
    let sheet = next["sheet"].as_str().unwrap();
    let (status, png) = call(&state, "GET", sheet, None).await;
    assert_eq!(status, StatusCode::OK);
    assert!(png.starts_with(b"\x89PNG\r\n\x1a\n"));
    let (status, pgm) = call(&state, "GET", &sheet.replace("sheet.png", "sheet.pgm"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert!(pgm.starts_with(b"P5"));
    for (k, url) in next["candidates"].as_array().unwrap().iter().enumerate() {
        let (status, png) = call(&state, "GET", url.as_str().unwrap(), None).await;
        assert_eq!(status, StatusCode::OK, "candidate {k}");
        let img = image_size(&png);
        assert_eq!(img, (48, 48));
    }
    let missing = sheet.replace("sheet.png", "candidate-8.png");
    assert_eq!(call(&state, "GET", &missing, None).await.0, StatusCode::NOT_FOUND);
}

/// Width and height from a PNG IHDR chunk.
fn image_size(png: &[u8]) -> (u32, u32) {
    let be = |b: &[u8]| u32::from_be_bytes([b[0], b[1], b[2], b[3]]);
    (be(&png[16..20]), be(&png[20..24]))
}

#[tokio::test]
async fn arc_session_scores_grids() {
    let f = fixture();
    let state = load(&f.config);
    let id = create(&state, "arc").await;
    let (_, bytes) = call(&state, "GET", &format!("/api/session/{id}/next"), None).await;
    assert_no_leak(&bytes);
    let next: Value = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(next["domain"], "arc");
    let test = next["test"].as_array().unwrap();
    assert!(test.iter().all(|p| p.as_object().unwrap().keys().eq(["input"].iter())));
    let pid = next["problem_id"].as_str().unwrap().to_string();
    let Item::Arc(task) = item_by_public(&f.arc, &pid) else { unreachable!() };
    let url = format!("/api/session/{id}/answer");
    let (status, _) =
        json_call(&state, "POST", &url, Some(json!({ "problem_id": pid, "answer": [[1, 2], [3]] }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) =
        json_call(&state, "POST", &url, Some(json!({ "problem_id": pid, "answer": task.test[0].output }))).await;
    assert_eq!(status, StatusCode::OK);
    let (_, summary) = json_call(&state, "GET", &format!("/api/session/{id}/summary"), None).await;
    assert_eq!(summary["correct"], 1.0);
    assert_eq!(summary["accuracy"], 0.5);
}

#[test]
fn suites_dir_may_be_a_single_dataset() {
    let f = fixture();
    let config = ServiceConfig { suites_dir: f.config.suites_dir.join("pair"), ..f.config.clone() };
    let state = AppState::load(config).unwrap();
    assert_eq!(state.suite_names(), ["pair"]);
    assert!(Path::new(&f.config.data_root).join("sessions").is_dir());
}
