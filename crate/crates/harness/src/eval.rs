//! Running a solver over a dataset.
//!
//! Every RAVEN problem becomes one request; every ARC task one request per
//! test pair, each pair weighing `1 / tests` of the task. Requests may be
//! spread over several adapter workers; results are stored by request index
//! and aggregated in dataset order, so the report does not depend on
//! scheduling.
//!
//! Failure handling per request: a crash restarts the solver and resends
//! once, a second crash aborts with `AdapterCrashed`; a timeout restarts the
//! solver and scores 0; a malformed reply aborts with `ProtocolViolation`.

use std::collections::VecDeque;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use conceptprobe_core::arc::{ArcGrid, MAX_GUESSES};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::adapter::{
    arc_payload, raven_image_payload, raven_payload, run_batch, Adapter, AdapterFault, AdapterSpec, Request, Response,
    DEFAULT_TIMEOUT,
};
use crate::dataset::{Dataset, Domain, Item};
use crate::error::HarnessError;
use crate::report::EvalReport;

#[derive(Debug, Clone)]
pub struct EvalOptions {
    /// Guesses per request: 1 for RAVEN, 1..=3 for ARC.
    pub guesses: usize,
    pub timeout: Duration,
    pub workers: usize,
    /// Send PGM sheet paths instead of symbolic panels (RAVEN only).
    pub image_mode: bool,
    /// Model name in the report; defaults to the adapter name.
    pub model: Option<String>,
    /// Where to write the per-request JSON-lines result log.
    pub audit_log: Option<PathBuf>,
    /// Scratch directory for directory-batch mode.
    pub work_dir: Option<PathBuf>,
}

impl EvalOptions {
    pub fn new(guesses: usize) -> EvalOptions {
        EvalOptions {
            guesses,
            timeout: DEFAULT_TIMEOUT,
            workers: 1,
            image_mode: false,
            model: None,
            audit_log: None,
            work_dir: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Answered,
    Timeout,
    /// No reply (batch mode without an output file).
    Failed,
}

/// One line of the result log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub request_id: String,
    pub item_id: String,
    pub concept_tags: Vec<String>,
    pub weight: f64,
    pub status: Status,
    pub answers: Vec<Value>,
    pub correct: bool,
}

/// Emission metadata, kept apart from the report content.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMeta {
    pub generated_at_unix: u64,
    pub adapter: String,
    pub domain: Domain,
    pub split: String,
    pub master_seed: u64,
    pub requests: usize,
    pub timeouts: usize,
    pub failures: usize,
    pub crash_retries: usize,
}

#[derive(Debug, Clone)]
pub struct EvalOutcome {
    pub report: EvalReport,
    pub meta: EvalMeta,
    pub records: Vec<ResultRecord>,
}

enum Truth {
    Choice(usize),
    Grid(ArcGrid),
}

struct Job {
    line: String,
    request_id: String,
    item_id: String,
    concept_tags: Vec<String>,
    weight: f64,
    truth: Truth,
}

/// Request ids are positional so they reveal nothing about the item.
fn request_id(n: usize) -> String {
    format!("q{n:06}")
}

fn jobs(dataset: &Dataset, dir: Option<&Path>, image_mode: bool) -> Result<Vec<Job>, HarnessError> {
    let mut out = Vec::new();
    for (item, entry) in dataset.items.iter().zip(&dataset.manifest.entries) {
        let tags = entry.concept_tags.clone();
        match item {
            Item::Raven(p) => {
                let payload = if image_mode {
                    let (Some(dir), Some(image)) = (dir, &entry.image) else {
                        return Err(HarnessError::ConfigInvalid(format!("image mode needs rendered sheets ({})", p.id)));
                    };
                    raven_image_payload(&dir.join(image), p.answers.len())
                } else {
                    raven_payload(p)
                };
                let id = request_id(out.len());
                let request = Request { id: id.clone(), domain: Domain::Raven, payload };
                out.push(Job {
                    line: serde_json::to_string(&request).expect("request serializes"),
                    request_id: id,
                    item_id: p.id.clone(),
                    concept_tags: tags,
                    weight: 1.0,
                    truth: Truth::Choice(p.correct_index),
                });
            }
            Item::Arc(t) => {
                let n = t.test.len();
                for (k, pair) in t.test.iter().enumerate() {
                    let id = request_id(out.len());
                    let request = Request { id: id.clone(), domain: Domain::Arc, payload: arc_payload(t, k) };
                    out.push(Job {
                        line: serde_json::to_string(&request).expect("request serializes"),
                        request_id: id,
                        item_id: t.id.clone(),
                        concept_tags: tags.clone(),
                        weight: 1.0 / n as f64,
                        truth: Truth::Grid(pair.output.clone()),
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Request lines exactly as a solver receives them, in dataset order.
pub fn request_lines(dataset: &Dataset, dir: Option<&Path>, image_mode: bool) -> Result<Vec<String>, HarnessError> {
    Ok(jobs(dataset, dir, image_mode)?.into_iter().map(|j| j.line).collect())
}

fn violation(line: &str, reason: impl Into<String>) -> HarnessError {
    HarnessError::ProtocolViolation { line: line.to_string(), reason: reason.into() }
}

fn judge(job: &Job, reply: &str, guesses: usize) -> Result<(Vec<Value>, bool), HarnessError> {
    let response: Response = serde_json::from_str(reply).map_err(|e| violation(reply, e.to_string()))?;
    if response.id != job.request_id {
        return Err(violation(reply, format!("expected id {}", job.request_id)));
    }
    if response.answers.len() > guesses {
        return Err(violation(reply, format!("{} answers, at most {guesses} allowed", response.answers.len())));
    }
    let correct = match &job.truth {
        Truth::Choice(c) => {
            let mut hit = false;
            for a in &response.answers {
                let i = a.as_u64().ok_or_else(|| violation(reply, "answer is not a candidate index"))?;
                if i >= 8 {
                    return Err(violation(reply, format!("candidate index {i} out of range")));
                }
                hit |= i as usize == *c;
            }
            hit
        }
        Truth::Grid(target) => {
            let mut hit = false;
            for a in &response.answers {
                let g: ArcGrid = serde_json::from_value(a.clone()).map_err(|e| violation(reply, e.to_string()))?;
                hit |= g == *target;
            }
            hit
        }
    };
    Ok((response.answers, correct))
}

fn record(job: &Job, status: Status, answers: Vec<Value>, correct: bool) -> ResultRecord {
    ResultRecord {
        request_id: job.request_id.clone(),
        item_id: job.item_id.clone(),
        concept_tags: job.concept_tags.clone(),
        weight: job.weight,
        status,
        answers,
        correct,
    }
}

/// Sends one job, applying the retry and timeout policy. Returns the record
/// and the number of crash retries used.
fn run_job(adapter: &mut dyn Adapter, job: &Job, opts: &EvalOptions) -> Result<(ResultRecord, usize), HarnessError> {
    let mut retries = 0;
    loop {
        match adapter.exchange(&job.line, opts.timeout) {
            Ok(reply) => {
                let (answers, correct) = judge(job, &reply, opts.guesses)?;
                return Ok((record(job, Status::Answered, answers, correct), retries));
            }
            Err(AdapterFault::Timeout) => return Ok((record(job, Status::Timeout, Vec::new(), false), retries)),
            Err(AdapterFault::Crashed(detail)) => {
                if retries == 1 {
                    return Err(HarnessError::AdapterCrashed { id: job.request_id.clone(), detail });
                }
                retries += 1;
                adapter.restart();
            }
        }
    }
}

fn check_guesses(domain: Domain, guesses: usize) -> Result<(), HarnessError> {
    let max = match domain {
        Domain::Raven => 1,
        Domain::Arc => MAX_GUESSES,
    };
    if guesses == 0 || guesses > max {
        return Err(HarnessError::ConfigInvalid(format!(
            "{guesses} guesses; {} allows 1..={max}",
            domain.name()
        )));
    }
    Ok(())
}

/// Evaluates `adapter` on `dataset`. `dir` is the dataset directory, needed
/// for image mode.
pub fn run_eval(
    dataset: &Dataset,
    dir: Option<&Path>,
    adapter: &AdapterSpec,
    opts: &EvalOptions,
) -> Result<EvalOutcome, HarnessError> {
    if dataset.items.is_empty() {
        return Err(HarnessError::EmptyManifest);
    }
    let domain = dataset.manifest.domain;
    check_guesses(domain, opts.guesses)?;
    if opts.timeout.is_zero() {
        return Err(HarnessError::ConfigInvalid("timeout must be positive".into()));
    }
    if opts.image_mode && domain != Domain::Raven {
        return Err(HarnessError::ConfigInvalid("image mode is RAVEN only".into()));
    }
    let jobs = jobs(dataset, dir, opts.image_mode)?;
    let (records, crash_retries) = match adapter {
        AdapterSpec::Batch(command) => run_batch_jobs(command, &jobs, opts)?,
        _ => run_streaming(adapter, &jobs, opts)?,
    };
    if let Some(path) = &opts.audit_log {
        write_log(path, &records)?;
    }
    let model = opts.model.clone().unwrap_or_else(|| adapter.name());
    let report = EvalReport::from_records(&model, dataset.manifest.split.name(), &records);
    let meta = EvalMeta {
        generated_at_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        adapter: adapter.name(),
        domain,
        split: dataset.manifest.split.name().to_string(),
        master_seed: dataset.manifest.master_seed,
        requests: records.len(),
        timeouts: records.iter().filter(|r| r.status == Status::Timeout).count(),
        failures: records.iter().filter(|r| r.status == Status::Failed).count(),
        crash_retries,
    };
    Ok(EvalOutcome { report, meta, records })
}

fn run_streaming(
    spec: &AdapterSpec,
    jobs: &[Job],
    opts: &EvalOptions,
) -> Result<(Vec<ResultRecord>, usize), HarnessError> {
    let queue = Mutex::new((0..jobs.len()).collect::<VecDeque<usize>>());
    let slots: Mutex<Vec<Option<ResultRecord>>> = Mutex::new(vec![None; jobs.len()]);
    let retries = Mutex::new(0usize);
    let failure: Mutex<Option<HarnessError>> = Mutex::new(None);
    std::thread::scope(|s| {
        for _ in 0..opts.workers.clamp(1, jobs.len()) {
            s.spawn(|| {
                let mut adapter = spec.instantiate().expect("streaming adapter");
                loop {
                    if failure.lock().expect("lock").is_some() {
                        return;
                    }
                    let Some(i) = queue.lock().expect("lock").pop_front() else { return };
                    match run_job(adapter.as_mut(), &jobs[i], opts) {
                        Ok((rec, r)) => {
                            slots.lock().expect("lock")[i] = Some(rec);
                            *retries.lock().expect("lock") += r;
                        }
                        Err(e) => {
                            failure.lock().expect("lock").get_or_insert(e);
                            return;
                        }
                    }
                }
            });
        }
    });
    if let Some(e) = failure.into_inner().expect("lock") {
        return Err(e);
    }
    let records = slots.into_inner().expect("lock").into_iter().map(|r| r.expect("every job ran")).collect();
    Ok((records, retries.into_inner().expect("lock")))
}

fn run_batch_jobs(command: &str, jobs: &[Job], opts: &EvalOptions) -> Result<(Vec<ResultRecord>, usize), HarnessError> {
    let work = match &opts.work_dir {
        Some(d) => d.clone(),
        None => std::env::temp_dir().join(format!(
            "conceptprobe-batch-{}-{}",
            std::process::id(),
            SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_nanos()).unwrap_or(0)
        )),
    };
    let lines: Vec<String> = jobs.iter().map(|j| j.line.clone()).collect();
    let replies = run_batch(command, &lines, &work, opts.timeout)?;
    let records = jobs
        .iter()
        .zip(replies)
        .map(|(job, reply)| match reply {
            Some(reply) => {
                let (answers, correct) = judge(job, &reply, opts.guesses)?;
                Ok(record(job, Status::Answered, answers, correct))
            }
            None => Ok(record(job, Status::Failed, Vec::new(), false)),
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    Ok((records, 0))
}

pub fn write_log(path: &Path, records: &[ResultRecord]) -> Result<(), HarnessError> {
    let io = |e: std::io::Error| HarnessError::Io { path: path.display().to_string(), message: e.to_string() };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io)?;
    }
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    for r in records {
        serde_json::to_writer(&mut f, r).map_err(|e| io(e.into()))?;
        f.write_all(b"\n").map_err(io)?;
    }
    f.flush().map_err(io)
}

pub fn read_log(path: &Path) -> Result<Vec<ResultRecord>, HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Io { path: path.display().to_string(), message: e.to_string() })?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| violation(l, e.to_string())))
        .collect()
}
