//! Bridge to a model running in a child process.
//!
//! Requests and responses are single JSON lines on the child's stdin and
//! stdout:
//!
//! ```text
//! -> {"id": 7, "inputs": [[0.1, 0.2, ...], ...]}
//! <- {"id": 7, "probs": [[0.3, 0.7], ...]}
//! ```
//!
//! Grid samples are sent flattened (row-major, channels last). Responses may
//! arrive in any order and are matched by id. A child that dies is restarted
//! once; a second death is an error.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::error::{BridgeError, Error, Result};
use crate::model::Model;
use crate::types::Sample;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExternalModelSpec {
    /// Program followed by its arguments.
    pub command: Vec<String>,
    pub n_classes: usize,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    /// Samples per request line.
    #[serde(default = "default_max_batch")]
    pub max_batch: usize,
}

fn default_timeout_ms() -> u64 {
    30_000
}

fn default_max_batch() -> usize {
    256
}

impl ExternalModelSpec {
    pub fn new(command: Vec<String>, n_classes: usize) -> Self {
        ExternalModelSpec { command, n_classes, timeout_ms: default_timeout_ms(), max_batch: default_max_batch() }
    }

    fn timeout(&self) -> Duration {
        Duration::from_millis(self.timeout_ms)
    }
}

#[derive(Serialize)]
struct Request<'a> {
    id: u64,
    inputs: Vec<&'a [f64]>,
}

#[derive(Deserialize)]
struct Response {
    id: u64,
    probs: Vec<Vec<f64>>,
}

struct Process {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

impl Process {
    fn spawn(spec: &ExternalModelSpec) -> Result<Process, BridgeError> {
        let (program, args) = spec
            .command
            .split_first()
            .ok_or_else(|| BridgeError::Malformed("empty model command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|source| BridgeError::Spawn { command: spec.command.join(" "), source })?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });
        debug!("started model process `{}`", spec.command.join(" "));
        Ok(Process { child, stdin, lines })
    }

    fn kill(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

struct State {
    process: Option<Process>,
    next_id: u64,
    restarted: bool,
}

/// A [`Model`] answered by a child process speaking the line protocol above.
pub struct ExternalModel {
    spec: ExternalModelSpec,
    state: Mutex<State>,
}

enum CallError {
    /// The child went away; the call may be retried after a restart.
    Died,
    Fatal(BridgeError),
}

impl From<BridgeError> for CallError {
    fn from(e: BridgeError) -> Self {
        CallError::Fatal(e)
    }
}

impl ExternalModel {
    pub fn new(spec: ExternalModelSpec) -> Result<Self> {
        if spec.n_classes == 0 || spec.max_batch == 0 || spec.timeout_ms == 0 {
            return Err(Error::invalid("n_classes, max_batch and timeout_ms must be positive"));
        }
        let process = Process::spawn(&spec)?;
        Ok(ExternalModel { spec, state: Mutex::new(State { process: Some(process), next_id: 0, restarted: false }) })
    }

    pub fn spec(&self) -> &ExternalModelSpec {
        &self.spec
    }

    fn exchange(spec: &ExternalModelSpec, state: &mut State, batch: &[Sample]) -> Result<Vec<Vec<f64>>, CallError> {
        let proc = state.process.as_mut().ok_or(CallError::Died)?;
        let mut pending: HashMap<u64, (usize, usize)> = HashMap::new();
        for (k, chunk) in batch.chunks(spec.max_batch).enumerate() {
            let id = state.next_id;
            state.next_id += 1;
            let req = Request { id, inputs: chunk.iter().map(|s| s.features()).collect() };
            let mut line = serde_json::to_string(&req).map_err(|e| BridgeError::Malformed(e.to_string()))?;
            line.push('\n');
            if proc.stdin.write_all(line.as_bytes()).and_then(|_| proc.stdin.flush()).is_err() {
                return Err(CallError::Died);
            }
            pending.insert(id, (k * spec.max_batch, chunk.len()));
        }

        let mut out: Vec<Vec<f64>> = vec![Vec::new(); batch.len()];
        while !pending.is_empty() {
            let waiting = *pending.keys().min().expect("non-empty");
            let deadline = Instant::now() + spec.timeout();
            let line = match proc.lines.recv_timeout(deadline.saturating_duration_since(Instant::now())) {
                Ok(Ok(line)) => line,
                Ok(Err(_)) | Err(RecvTimeoutError::Disconnected) => return Err(CallError::Died),
                Err(RecvTimeoutError::Timeout) => {
                    return Err(CallError::Fatal(BridgeError::Timeout { id: waiting, timeout: spec.timeout() }))
                }
            };
            if line.trim().is_empty() {
                continue;
            }
            let resp: Response = serde_json::from_str(&line).map_err(|e| BridgeError::Malformed(format!("{e}: {line}")))?;
            let (start, len) = pending.remove(&resp.id).ok_or(BridgeError::IdMismatch { got: resp.id })?;
            if resp.probs.len() != len {
                return Err(BridgeError::RowCount { id: resp.id, got: resp.probs.len(), expected: len }.into());
            }
            for (row, p) in resp.probs.into_iter().enumerate() {
                let sum: f64 = p.iter().sum();
                if p.len() != spec.n_classes || p.iter().any(|v| !v.is_finite() || *v < 0.0) || (sum - 1.0).abs() > 1e-6 {
                    return Err(BridgeError::NotNormalized { id: resp.id, row, sum }.into());
                }
                out[start + row] = p;
            }
        }
        Ok(out)
    }

    /// Sends `batch` and returns one probability row per sample, in order.
    pub fn call(&self, batch: &[Sample]) -> Result<Vec<Vec<f64>>> {
        let mut state = self.state.lock().map_err(|_| Error::Pool("model bridge lock poisoned".into()))?;
        loop {
            match Self::exchange(&self.spec, &mut state, batch) {
                Ok(rows) => return Ok(rows),
                Err(CallError::Fatal(e)) => {
                    if let Some(mut p) = state.process.take() {
                        p.kill();
                    }
                    return Err(e.into());
                }
                Err(CallError::Died) => {
                    if let Some(mut p) = state.process.take() {
                        p.kill();
                    }
                    if state.restarted {
                        return Err(BridgeError::Crashed { restarted: true }.into());
                    }
                    warn!("model process exited; restarting it once");
                    state.restarted = true;
                    state.process = Some(Process::spawn(&self.spec)?);
                }
            }
        }
    }
}

/// One round trip through the bridge.
pub fn external_model_call(model: &ExternalModel, batch: &[Sample]) -> Result<Vec<Vec<f64>>> {
    model.call(batch)
}

impl Model for ExternalModel {
    fn n_classes(&self) -> usize {
        self.spec.n_classes
    }

    fn predict_probs(&self, samples: &[Sample]) -> Result<Vec<Vec<f64>>> {
        self.call(samples)
    }

    fn is_serial(&self) -> bool {
        true
    }
}

impl Drop for ExternalModel {
    fn drop(&mut self) {
        if let Ok(state) = self.state.get_mut() {
            if let Some(mut p) = state.process.take() {
                drop(p.stdin);
                let _ = p.child.kill();
                let _ = p.child.wait();
            }
        }
    }
}
