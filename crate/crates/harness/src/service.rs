//! HTTP trial service for human benchmarking.
//!
//! | method | path | body / reply |
//! |---|---|---|
//! | GET | `/api/suites` | `[{name, domain, n}]` |
//! | POST | `/api/session` | `{suite}` → `{session_id, n}` |
//! | GET | `/api/session/{id}/next` | next unanswered problem, or `{done: true}` |
//! | POST | `/api/session/{id}/answer` | `{problem_id, answer}` → `{accepted, remaining}` |
//! | GET | `/api/session/{id}/summary` | `{n, answered, correct, accuracy, per_concept, reference}` |
//! | GET | `/api/session/{id}/report.csv` | the summary as report CSV |
//! | GET | `/api/suite/{suite}/problem/{pid}/{file}` | `sheet.png`, `sheet.pgm`, `candidate-K.png` |
//!
//! RAVEN answers are candidate indices 0..=7; ARC answers are one grid (or
//! a list of grids, one per test input). Unanswered problems count as
//! wrong, so `accuracy = correct / n`.
//!
//! Every session has an append-only JSON-lines journal under
//! `<data root>/sessions/<id>.jsonl`. An answer is journaled before it is
//! acknowledged, and journals are replayed at startup.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use conceptprobe_core::arc::ArcGrid;
use conceptprobe_core::raven::render::{render_panel, render_problem};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::Mutex;

use crate::dataset::{load_dataset, sha256_hex, Domain, Item, MANIFEST_FILE};
use crate::error::HarnessError;
use crate::eval::{ResultRecord, Status};
use crate::report::EvalReport;

/// Human accuracy on the original RAVEN test set, shown for comparison.
pub const HUMAN_REFERENCE_ACCURACY: f64 = 0.84;
pub const HUMAN_REFERENCE_LABEL: &str = "human baseline on RAVEN";
pub const DEFAULT_IMAGE_SIDE: u32 = 96;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// A dataset directory, or a directory of dataset directories.
    pub suites_dir: PathBuf,
    /// Session journals live in `<data_root>/sessions`.
    pub data_root: PathBuf,
    pub image_side: u32,
}

pub struct Suite {
    pub name: String,
    pub domain: Domain,
    pub items: Vec<Item>,
    pub tags: Vec<Vec<String>>,
    /// Ids shown to participants; derived from item ids without revealing them.
    pub public_ids: Vec<String>,
    index: HashMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
enum JournalEvent {
    Created { session_id: String, suite: String, problem_ids: Vec<String>, at: u64 },
    Answer { problem_id: String, answer: Value, score: f64, at: u64 },
}

#[derive(Debug, Clone)]
struct Recorded {
    score: f64,
}

struct Session {
    suite: String,
    problem_ids: Vec<String>,
    answers: BTreeMap<String, Recorded>,
    journal: PathBuf,
}

pub struct AppState {
    config: ServiceConfig,
    suites: HashMap<String, Arc<Suite>>,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn load_suite(name: &str, dir: &Path) -> Result<Suite, HarnessError> {
    let ds = load_dataset(dir)?;
    let public_ids: Vec<String> = ds.items.iter().map(|it| sha256_hex(it.id().as_bytes())[..16].to_string()).collect();
    let index = public_ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
    Ok(Suite {
        name: name.to_string(),
        domain: ds.manifest.domain,
        tags: ds.manifest.entries.iter().map(|e| e.concept_tags.clone()).collect(),
        items: ds.items,
        public_ids,
        index,
    })
}

fn load_suites(dir: &Path) -> Result<HashMap<String, Arc<Suite>>, HarnessError> {
    let name_of = |p: &Path| p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let mut out = HashMap::new();
    if dir.join(MANIFEST_FILE).exists() {
        let name = name_of(dir);
        out.insert(name.clone(), Arc::new(load_suite(&name, dir)?));
        return Ok(out);
    }
    let entries = std::fs::read_dir(dir)
        .map_err(|e| HarnessError::Io { path: dir.display().to_string(), message: e.to_string() })?;
    for entry in entries.flatten() {
        let path = entry.path();
        if path.join(MANIFEST_FILE).exists() {
            let name = name_of(&path);
            out.insert(name.clone(), Arc::new(load_suite(&name, &path)?));
        }
    }
    Ok(out)
}

fn replay(path: &Path) -> Option<(String, Session)> {
    let text = std::fs::read_to_string(path).ok()?;
    let mut lines = text.lines().filter_map(|l| serde_json::from_str::<JournalEvent>(l).ok());
    let JournalEvent::Created { session_id, suite, problem_ids, .. } = lines.next()? else { return None };
    let mut session = Session { suite, problem_ids, answers: BTreeMap::new(), journal: path.to_path_buf() };
    for ev in lines {
        if let JournalEvent::Answer { problem_id, score, .. } = ev {
            session.answers.entry(problem_id).or_insert(Recorded { score });
        }
    }
    Some((session_id, session))
}

impl AppState {
    pub fn load(config: ServiceConfig) -> Result<AppState, HarnessError> {
        let suites = load_suites(&config.suites_dir)?;
        let dir = config.data_root.join("sessions");
        std::fs::create_dir_all(&dir).map_err(|e| HarnessError::Io { path: dir.display().to_string(), message: e.to_string() })?;
        let mut sessions = HashMap::new();
        let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)
            .map_err(|e| HarnessError::Io { path: dir.display().to_string(), message: e.to_string() })?
            .flatten()
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        paths.sort();
        for p in paths {
            let Some((id, s)) = replay(&p) else { continue };
            // Journals of suites that are gone or were regenerated differently are skipped.
            let known = suites.get(&s.suite).is_some_and(|suite| {
                s.problem_ids.iter().all(|pid| suite.index.contains_key(pid))
                    && s.answers.keys().all(|pid| s.problem_ids.contains(pid))
            });
            if known {
                sessions.insert(id, Arc::new(Mutex::new(s)));
            }
        }
        Ok(AppState { config, suites, sessions: RwLock::new(sessions) })
    }

    pub fn suite_names(&self) -> Vec<String> {
        let mut v: Vec<String> = self.suites.keys().cloned().collect();
        v.sort();
        v
    }

    fn session(&self, id: &str) -> Option<Arc<Mutex<Session>>> {
        self.sessions.read().expect("lock").get(id).cloned()
    }
}

fn append(path: &Path, event: &JournalEvent) -> std::io::Result<()> {
    let mut f = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
    let mut line = serde_json::to_vec(event).expect("event serializes");
    line.push(b'\n');
    f.write_all(&line)?;
    f.sync_data()
}

struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

fn not_found(what: impl Into<String>) -> ApiError {
    ApiError(StatusCode::NOT_FOUND, what.into())
}

fn bad_request(what: impl Into<String>) -> ApiError {
    ApiError(StatusCode::BAD_REQUEST, what.into())
}

fn internal(e: impl std::fmt::Display) -> ApiError {
    ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/suites", get(list_suites))
        .route("/api/session", post(create_session))
        .route("/api/session/{id}/next", get(next_problem))
        .route("/api/session/{id}/answer", post(submit_answer))
        .route("/api/session/{id}/summary", get(summary))
        .route("/api/session/{id}/report.csv", get(report_csv))
        .route("/api/suite/{suite}/problem/{pid}/{file}", get(problem_file))
        .with_state(state)
}

pub async fn serve(port: u16, config: ServiceConfig) -> anyhow::Result<()> {
    let state = Arc::new(AppState::load(config)?);
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
    eprintln!("serving {} suite(s) on port {port}", state.suites.len());
    axum::serve(listener, router(state)).await?;
    Ok(())
}

async fn list_suites(State(state): State<Arc<AppState>>) -> Json<Value> {
    let list: Vec<Value> = state
        .suite_names()
        .iter()
        .map(|n| {
            let s = &state.suites[n];
            json!({ "name": n, "domain": s.domain, "n": s.items.len() })
        })
        .collect();
    Json(Value::Array(list))
}

#[derive(Deserialize)]
struct CreateBody {
    suite: String,
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    body: Result<Json<CreateBody>, JsonRejection>,
) -> ApiResult<Json<Value>> {
    let Json(body) = body.map_err(|e| bad_request(e.body_text()))?;
    let suite = state.suites.get(&body.suite).ok_or_else(|| not_found(format!("unknown suite {}", body.suite)))?;
    let id = format!("{:032x}", rand::random::<u128>());
    let problem_ids = suite.public_ids.clone();
    let journal = state.config.data_root.join("sessions").join(format!("{id}.jsonl"));
    let event = JournalEvent::Created {
        session_id: id.clone(),
        suite: suite.name.clone(),
        problem_ids: problem_ids.clone(),
        at: now(),
    };
    append(&journal, &event).map_err(internal)?;
    let n = problem_ids.len();
    let session = Session { suite: suite.name.clone(), problem_ids, answers: BTreeMap::new(), journal };
    state.sessions.write().expect("lock").insert(id.clone(), Arc::new(Mutex::new(session)));
    Ok(Json(json!({ "session_id": id, "n": n })))
}

/// What the participant sees: no tags, rules or answers.
fn problem_view(suite: &Suite, index: usize) -> Value {
    let item = &suite.items[index];
    let pid = &suite.public_ids[index];
    let base = format!("/api/suite/{}/problem/{pid}", suite.name);
    match item {
        Item::Raven(p) => json!({
            "domain": "raven",
            "problem_id": pid,
            "sheet": format!("{base}/sheet.png"),
            "candidates": (0..p.answers.len()).map(|k| format!("{base}/candidate-{k}.png")).collect::<Vec<_>>(),
        }),
        Item::Arc(t) => json!({
            "domain": "arc",
            "problem_id": pid,
            "train": t.train,
            "test": t.test.iter().map(|p| json!({ "input": p.input })).collect::<Vec<_>>(),
        }),
    }
}

async fn next_problem(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<Value>> {
    let session = state.session(&id).ok_or_else(|| not_found("unknown session"))?;
    let s = session.lock().await;
    let suite = &state.suites[&s.suite];
    let remaining = s.problem_ids.len() - s.answers.len();
    let Some((position, pid)) = s.problem_ids.iter().enumerate().find(|(_, p)| !s.answers.contains_key(*p)) else {
        return Ok(Json(json!({ "done": true, "n": s.problem_ids.len(), "remaining": 0 })));
    };
    let mut view = problem_view(suite, suite.index[pid]);
    let obj = view.as_object_mut().expect("object");
    obj.insert("done".into(), json!(false));
    obj.insert("position".into(), json!(position));
    obj.insert("n".into(), json!(s.problem_ids.len()));
    obj.insert("remaining".into(), json!(remaining));
    Ok(Json(view))
}

#[derive(Deserialize)]
struct AnswerBody {
    problem_id: String,
    answer: Value,
}

/// Score of a submitted answer, or why it is malformed.
fn score_answer(item: &Item, answer: &Value) -> Result<f64, String> {
    match item {
        Item::Raven(p) => {
            let i = answer.as_u64().ok_or("answer must be a candidate index")?;
            if i as usize >= p.answers.len() {
                return Err(format!("candidate index {i} out of range"));
            }
            Ok(if i as usize == p.correct_index { 1.0 } else { 0.0 })
        }
        Item::Arc(t) => {
            let grids: Vec<ArcGrid> = if t.test.len() == 1 {
                vec![serde_json::from_value(answer.clone()).map_err(|e| e.to_string())?]
            } else {
                serde_json::from_value(answer.clone()).map_err(|e| e.to_string())?
            };
            if grids.len() != t.test.len() {
                return Err(format!("expected {} grids", t.test.len()));
            }
            let hits = grids.iter().zip(&t.test).filter(|(g, p)| **g == p.output).count();
            Ok(hits as f64 / t.test.len() as f64)
        }
    }
}

async fn submit_answer(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<AnswerBody>, JsonRejection>,
) -> ApiResult<Json<Value>> {
    let session = state.session(&id).ok_or_else(|| not_found("unknown session"))?;
    let Json(body) = body.map_err(|e| bad_request(e.body_text()))?;
    let mut s = session.lock().await;
    if !s.problem_ids.contains(&body.problem_id) {
        return Err(bad_request(format!("problem {} is not part of this session", body.problem_id)));
    }
    if s.answers.contains_key(&body.problem_id) {
        return Err(ApiError(StatusCode::CONFLICT, format!("problem {} already answered", body.problem_id)));
    }
    let suite = &state.suites[&s.suite];
    let item = &suite.items[suite.index[&body.problem_id]];
    let score = score_answer(item, &body.answer).map_err(bad_request)?;
    let event = JournalEvent::Answer { problem_id: body.problem_id.clone(), answer: body.answer, score, at: now() };
    append(&s.journal, &event).map_err(internal)?;
    s.answers.insert(body.problem_id, Recorded { score });
    let remaining = s.problem_ids.len() - s.answers.len();
    Ok(Json(json!({ "accepted": true, "remaining": remaining })))
}

fn session_report(id: &str, s: &Session, suite: &Suite) -> EvalReport {
    let records: Vec<ResultRecord> = s
        .problem_ids
        .iter()
        .map(|pid| {
            let rec = s.answers.get(pid);
            // The weight carries the (possibly fractional) score of the item.
            ResultRecord {
                request_id: pid.clone(),
                item_id: pid.clone(),
                concept_tags: suite.tags[suite.index[pid]].clone(),
                weight: rec.map_or(1.0, |r| r.score),
                status: if rec.is_some() { Status::Answered } else { Status::Failed },
                answers: Vec::new(),
                correct: rec.is_some_and(|r| r.score > 0.0),
            }
        })
        .collect();
    EvalReport::from_records(&format!("human:{id}"), &suite.name, &records)
}

async fn summary(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<Value>> {
    let session = state.session(&id).ok_or_else(|| not_found("unknown session"))?;
    let s = session.lock().await;
    let suite = &state.suites[&s.suite];
    let report = session_report(&id, &s, suite);
    let answered_in = |slice: Option<&str>| {
        s.answers
            .keys()
            .filter(|pid| slice.is_none_or(|t| suite.tags[suite.index[*pid]].iter().any(|x| x == t)))
            .count()
    };
    let overall = &report.rows[0];
    let per_concept: Vec<Value> = report.rows[1..]
        .iter()
        .map(|r| {
            json!({
                "slice": r.slice, "n": r.n, "answered": answered_in(Some(&r.slice)),
                "correct": r.correct, "accuracy": r.accuracy,
            })
        })
        .collect();
    Ok(Json(json!({
        "session_id": id,
        "suite": s.suite,
        "n": overall.n,
        "answered": answered_in(None),
        "correct": overall.correct,
        "accuracy": overall.accuracy,
        "per_concept": per_concept,
        "reference": { "label": HUMAN_REFERENCE_LABEL, "accuracy": HUMAN_REFERENCE_ACCURACY },
    })))
}

async fn report_csv(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<Response> {
    let session = state.session(&id).ok_or_else(|| not_found("unknown session"))?;
    let s = session.lock().await;
    let csv = session_report(&id, &s, &state.suites[&s.suite]).to_csv();
    Ok(([(header::CONTENT_TYPE, "text/csv")], csv).into_response())
}

fn png(width: u32, height: u32, pixels: Vec<u8>) -> Result<Vec<u8>, ApiError> {
    let img = image::GrayImage::from_raw(width, height, pixels).ok_or_else(|| internal("bitmap size"))?;
    let mut out = std::io::Cursor::new(Vec::new());
    img.write_to(&mut out, image::ImageFormat::Png).map_err(internal)?;
    Ok(out.into_inner())
}

async fn problem_file(
    State(state): State<Arc<AppState>>,
    UrlPath((suite, pid, file)): UrlPath<(String, String, String)>,
) -> ApiResult<Response> {
    let suite = state.suites.get(&suite).ok_or_else(|| not_found("unknown suite"))?;
    let index = *suite.index.get(&pid).ok_or_else(|| not_found("unknown problem"))?;
    let Item::Raven(p) = &suite.items[index] else { return Err(not_found("ARC problems have no images")) };
    let side = state.config.image_side;
    let (bytes, mime) = match file.as_str() {
        "sheet.pgm" => (render_problem(p, side).map_err(internal)?.to_pgm(), "image/x-portable-graymap"),
        "sheet.png" => {
            let b = render_problem(p, side).map_err(internal)?;
            (png(b.width, b.height, b.pixels)?, "image/png")
        }
        _ => {
            let k: usize = file
                .strip_prefix("candidate-")
                .and_then(|r| r.strip_suffix(".png"))
                .and_then(|k| k.parse().ok())
                .filter(|&k| k < p.answers.len())
                .ok_or_else(|| not_found("unknown file"))?;
            let b = render_panel(&p.answers[k], side).map_err(internal)?;
            (png(b.width, b.height, b.pixels)?, "image/png")
        }
    };
    Ok(([(header::CONTENT_TYPE, mime)], bytes).into_response())
}
