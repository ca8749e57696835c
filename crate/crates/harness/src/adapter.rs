//! Solver adapters and the line protocol.
//!
//! Each request is one JSON object on one line:
//!
//! ```json
//! {"id": "...", "domain": "raven", "payload": {...}}
//! ```
//!
//! and the solver answers with one line `{"id": "...", "answers": [...]}`.
//! RAVEN answers are candidate indices (0-based, one guess); ARC answers are
//! up to three grids for the single test input in the payload. Payloads
//! never carry concept tags, rule sets, correct indices or test outputs.
//!
//! Built-in solvers parse and emit the same lines as external processes, so
//! the bytes a solver can observe are identical for both.

use std::io::{BufRead, BufReader, Write};
use std::os::unix::process::CommandExt;
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::time::{Duration, Instant};

use conceptprobe_core::arc::concepts::reference_solve;
use conceptprobe_core::arc::{ArcGrid, ArcPair, ArcTask};
use conceptprobe_core::raven::answers::majority_vote_attack;
use conceptprobe_core::raven::io::{panels_from_json, panels_to_json, PanelJson};
use conceptprobe_core::raven::model::LayoutKind;
use conceptprobe_core::raven::oracle::{solve_candidates, Verdict};
use conceptprobe_core::raven::Problem;
use conceptprobe_core::seed;
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dataset::Domain;
use crate::error::HarnessError;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub id: String,
    pub domain: Domain,
    pub payload: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub id: String,
    pub answers: Vec<Value>,
}

/// Symbolic RAVEN payload: layout, 8 context panels, 8 candidates.
pub fn raven_payload(problem: &Problem) -> Value {
    json!({
        "layout": problem.layout(),
        "context": panels_to_json(&problem.matrix.context),
        "answers": panels_to_json(&problem.answers),
    })
}

/// Image-mode RAVEN payload: path of the PGM sheet.
pub fn raven_image_payload(sheet: &Path, candidates: usize) -> Value {
    json!({ "image": sheet.display().to_string(), "candidates": candidates })
}

/// ARC payload for test pair `test_index`: demonstrations plus that input.
pub fn arc_payload(task: &ArcTask, test_index: usize) -> Value {
    json!({
        "train": task.train,
        "test": [{ "input": task.test[test_index].input }],
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Builtin {
    /// Symbolic RAVEN oracle; reference transforms for ARC.
    Oracle,
    /// Seeded uniform guesses, deterministic per request id.
    Random(u64),
    /// Returns the test input (ARC) or candidate 0 (RAVEN).
    Identity,
    Constant(usize),
    MajorityVote,
}

impl Builtin {
    pub fn name(&self) -> String {
        match self {
            Builtin::Oracle => "oracle".into(),
            Builtin::Random(s) => format!("random:{s}"),
            Builtin::Identity => "identity".into(),
            Builtin::Constant(k) => format!("constant:{k}"),
            Builtin::MajorityVote => "majority-vote".into(),
        }
    }

    fn answer(&self, request: &Request) -> Result<Vec<Value>, String> {
        match request.domain {
            Domain::Raven => self.answer_raven(request),
            Domain::Arc => self.answer_arc(request),
        }
    }

    fn answer_raven(&self, request: &Request) -> Result<Vec<Value>, String> {
        let p = &request.payload;
        let n = match p.get("answers").and_then(Value::as_array) {
            Some(a) => a.len(),
            None => p.get("candidates").and_then(Value::as_u64).ok_or("payload without candidates")? as usize,
        };
        let panels = || -> Result<_, String> {
            let layout: LayoutKind = serde_json::from_value(p["layout"].clone()).map_err(|e| e.to_string())?;
            let read = |field: &str| -> Result<_, String> {
                let raw: Vec<PanelJson> = serde_json::from_value(p[field].clone()).map_err(|e| e.to_string())?;
                panels_from_json(layout, &raw, field).map_err(|e| e.to_string())
            };
            Ok((read("context")?, read("answers")?))
        };
        let index = match self {
            Builtin::Oracle => {
                let (context, answers) = panels()?;
                match solve_candidates(&context, &answers) {
                    Verdict::Unique(i) => Some(i),
                    Verdict::Ambiguous(v) => v.first().copied(),
                    Verdict::NoneConsistent => None,
                }
            }
            Builtin::MajorityVote => {
                let (_, answers) = panels()?;
                match majority_vote_attack(&answers).chosen {
                    conceptprobe_core::raven::Choice::Index(i) => Some(i),
                    conceptprobe_core::raven::Choice::Abstain => None,
                }
            }
            Builtin::Random(s) => Some(request_rng(*s, &request.id).gen_range(0..n.max(1))),
            Builtin::Identity => Some(0),
            Builtin::Constant(k) => Some(*k),
        };
        Ok(index.map(|i| vec![json!(i)]).unwrap_or_default())
    }

    fn answer_arc(&self, request: &Request) -> Result<Vec<Value>, String> {
        let p = &request.payload;
        let train: Vec<ArcPair> = serde_json::from_value(p["train"].clone()).map_err(|e| e.to_string())?;
        let input: ArcGrid = serde_json::from_value(p["test"][0]["input"].clone()).map_err(|e| e.to_string())?;
        let guesses: Vec<ArcGrid> = match self {
            Builtin::Oracle => {
                // The solver never sees the target; the placeholder output is unused.
                let task = ArcTask {
                    id: String::new(),
                    train,
                    test: vec![ArcPair { input: input.clone(), output: input }],
                    concept_tag: None,
                };
                reference_solve(&task).remove(0)
            }
            Builtin::Identity => vec![input],
            Builtin::Random(s) => {
                let mut rng = request_rng(*s, &request.id);
                let mut g = input.clone();
                for r in 0..g.height() {
                    for c in 0..g.width() {
                        g.set(r, c, rng.gen_range(0..10));
                    }
                }
                vec![g]
            }
            Builtin::Constant(_) | Builtin::MajorityVote => Vec::new(),
        };
        Ok(guesses.iter().map(|g| json!(g)).collect())
    }
}

fn request_rng(seed: u64, id: &str) -> impl Rng {
    let coords: Vec<u64> = id.bytes().map(u64::from).collect();
    seed::rng(seed::derive_seed(seed, &coords))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AdapterFault {
    Timeout,
    Crashed(String),
}

/// Kills the shell and everything it started; solvers run in their own
/// process group.
fn kill_group(child: &mut Child) {
    // SAFETY: plain syscall on a process group id we created.
    unsafe {
        libc::kill(-(child.id() as libc::pid_t), libc::SIGKILL);
    }
    let _ = child.kill();
    let _ = child.wait();
}

/// A solver reachable through request/response lines.
pub trait Adapter: Send {
    /// Sends one request line (no trailing newline) and returns the response
    /// line.
    fn exchange(&mut self, line: &str, timeout: Duration) -> Result<String, AdapterFault>;

    /// Drops any running process; the next exchange starts a fresh one.
    fn restart(&mut self) {}
}

pub struct BuiltinAdapter(pub Builtin);

impl Adapter for BuiltinAdapter {
    fn exchange(&mut self, line: &str, _timeout: Duration) -> Result<String, AdapterFault> {
        let request: Request = serde_json::from_str(line).map_err(|e| AdapterFault::Crashed(e.to_string()))?;
        let answers = self.0.answer(&request).map_err(AdapterFault::Crashed)?;
        Ok(serde_json::to_string(&Response { id: request.id, answers }).expect("response serializes"))
    }
}

struct Running {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

/// Long-running solver process spoken to over stdin/stdout (`sh -c CMD`).
pub struct ProcessAdapter {
    command: String,
    running: Option<Running>,
}

impl ProcessAdapter {
    pub fn new(command: &str) -> ProcessAdapter {
        ProcessAdapter { command: command.to_string(), running: None }
    }

    fn spawn(&self) -> Result<Running, AdapterFault> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(&self.command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .process_group(0)
            .spawn()
            .map_err(|e| AdapterFault::Crashed(format!("spawn failed: {e}")))?;
        let stdin = child.stdin.take().expect("piped");
        let stdout = child.stdout.take().expect("piped");
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });
        Ok(Running { child, stdin, lines: rx })
    }
}

impl Adapter for ProcessAdapter {
    fn exchange(&mut self, line: &str, timeout: Duration) -> Result<String, AdapterFault> {
        if self.running.is_none() {
            self.running = Some(self.spawn()?);
        }
        let running = self.running.as_mut().expect("just spawned");
        let sent = writeln!(running.stdin, "{line}").and_then(|_| running.stdin.flush());
        if let Err(e) = sent {
            self.restart();
            return Err(AdapterFault::Crashed(format!("write failed: {e}")));
        }
        match running.lines.recv_timeout(timeout) {
            Ok(Ok(reply)) => Ok(reply),
            Ok(Err(e)) => {
                self.restart();
                Err(AdapterFault::Crashed(format!("read failed: {e}")))
            }
            Err(RecvTimeoutError::Timeout) => {
                self.restart();
                Err(AdapterFault::Timeout)
            }
            Err(RecvTimeoutError::Disconnected) => {
                self.restart();
                Err(AdapterFault::Crashed("solver closed its output".into()))
            }
        }
    }

    fn restart(&mut self) {
        if let Some(mut r) = self.running.take() {
            kill_group(&mut r.child);
        }
    }
}

impl Drop for ProcessAdapter {
    fn drop(&mut self) {
        self.restart();
    }
}

/// How to reach a solver, parsed from the `--adapter` argument.
///
/// Built-in names: `oracle`, `reference` (same as `oracle`), `identity`,
/// `random[:SEED]`, `constant[:INDEX]`, `majority-vote`. `batch:CMD` selects
/// directory-batch mode; anything else is a shell command speaking lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AdapterSpec {
    Builtin(Builtin),
    Process(String),
    Batch(String),
}

impl AdapterSpec {
    pub fn parse(text: &str) -> Result<AdapterSpec, HarnessError> {
        let text = text.trim();
        if text.is_empty() {
            return Err(HarnessError::ConfigInvalid("empty adapter".into()));
        }
        let (head, arg) = match text.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (text, None),
        };
        let number = |default: u64| -> Result<u64, HarnessError> {
            arg.map_or(Ok(default), |a| {
                a.parse().map_err(|_| HarnessError::ConfigInvalid(format!("bad adapter argument in {text}")))
            })
        };
        Ok(match head {
            "oracle" | "reference" if arg.is_none() => AdapterSpec::Builtin(Builtin::Oracle),
            "identity" if arg.is_none() => AdapterSpec::Builtin(Builtin::Identity),
            "majority-vote" if arg.is_none() => AdapterSpec::Builtin(Builtin::MajorityVote),
            "random" => AdapterSpec::Builtin(Builtin::Random(number(0)?)),
            "constant" => AdapterSpec::Builtin(Builtin::Constant(number(0)? as usize)),
            "batch" => match arg {
                Some(cmd) if !cmd.trim().is_empty() => AdapterSpec::Batch(cmd.trim().to_string()),
                _ => return Err(HarnessError::ConfigInvalid("batch adapter needs a command".into())),
            },
            _ => AdapterSpec::Process(text.to_string()),
        })
    }

    pub fn name(&self) -> String {
        match self {
            AdapterSpec::Builtin(b) => b.name(),
            AdapterSpec::Process(c) => c.clone(),
            AdapterSpec::Batch(c) => format!("batch:{c}"),
        }
    }

    /// A streaming adapter instance; `None` for batch mode.
    pub fn instantiate(&self) -> Option<Box<dyn Adapter>> {
        match self {
            AdapterSpec::Builtin(b) => Some(Box::new(BuiltinAdapter(b.clone()))),
            AdapterSpec::Process(c) => Some(Box::new(ProcessAdapter::new(c))),
            AdapterSpec::Batch(_) => None,
        }
    }
}

/// Directory-batch fallback: writes `IN/<n>.json` request files, runs
/// `CMD IN OUT` once and reads `OUT/<n>.json` responses. Missing or
/// unreadable responses come back as `None`.
pub fn run_batch(
    command: &str,
    lines: &[String],
    work_dir: &Path,
    timeout: Duration,
) -> Result<Vec<Option<String>>, HarnessError> {
    let io = |path: &Path, e: std::io::Error| HarnessError::Io { path: path.display().to_string(), message: e.to_string() };
    let (input, output): (PathBuf, PathBuf) = (work_dir.join("in"), work_dir.join("out"));
    for d in [&input, &output] {
        std::fs::create_dir_all(d).map_err(|e| io(d, e))?;
    }
    for (n, line) in lines.iter().enumerate() {
        let path = input.join(format!("{n:06}.json"));
        std::fs::write(&path, line).map_err(|e| io(&path, e))?;
    }
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(format!("{command} \"$0\" \"$1\""))
        .arg(&input)
        .arg(&output)
        .stdin(Stdio::null())
        .process_group(0)
        .spawn()
        .map_err(|e| HarnessError::AdapterUnavailable(e.to_string()))?;
    let deadline = Instant::now() + timeout.saturating_mul(lines.len().max(1) as u32);
    loop {
        match child.try_wait() {
            Ok(Some(_)) => break,
            Ok(None) if Instant::now() >= deadline => {
                kill_group(&mut child);
                break;
            }
            Ok(None) => std::thread::sleep(Duration::from_millis(5)),
            Err(e) => return Err(HarnessError::AdapterUnavailable(e.to_string())),
        }
    }
    Ok((0..lines.len())
        .map(|n| {
            std::fs::read_to_string(output.join(format!("{n:06}.json")))
                .ok()
                .map(|s| s.trim().to_string())
        })
        .collect())
}
