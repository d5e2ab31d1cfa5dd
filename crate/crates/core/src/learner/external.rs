//! Client for learners running in a child process.
//!
//! Line-delimited JSON over the child's stdin/stdout:
//!
//! ```text
//! > {"cmd":"fit","id":1,"X":[[..]],"y":[..],"mask":[..],"seed":7,"hyperparams":{..}}
//! < {"id":1,"ok":true}
//! > {"cmd":"predict","id":2,"X":[[..]]}
//! < {"id":2,"yhat":[..]}
//! > {"cmd":"shutdown"}
//! ```
//!
//! Each fitted model owns one process.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::learner::CoalitionMask;

const TRANSCRIPT_LINES: usize = 12;
const TRANSCRIPT_LINE_CHARS: usize = 240;

fn default_timeout() -> u64 {
    300
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalSpec {
    /// Program followed by its arguments.
    pub command: Vec<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default)]
    pub hyperparams: BTreeMap<String, f64>,
}

impl ExternalSpec {
    pub fn new(command: Vec<String>) -> Self {
        ExternalSpec {
            command,
            timeout_secs: default_timeout(),
            hyperparams: BTreeMap::new(),
        }
    }

    /// Splits a command line on whitespace.
    pub fn from_command_line(line: &str) -> Self {
        Self::new(line.split_whitespace().map(str::to_string).collect())
    }

    pub fn validate(&self) -> Result<()> {
        if self.command.is_empty() {
            return Err(Error::validation("external learner command is empty"));
        }
        if self.timeout_secs == 0 {
            return Err(Error::validation("external learner timeout must be positive"));
        }
        Ok(())
    }
}

pub(crate) struct ExternalSession {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    timeout: Duration,
    next_id: u64,
    transcript: Vec<String>,
}

impl ExternalSession {
    fn spawn(spec: &ExternalSpec) -> Result<Self> {
        spec.validate()?;
        let mut child = Command::new(&spec.command[0])
            .args(&spec.command[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::Protocol {
                message: format!("failed to start '{}': {e}", spec.command.join(" ")),
                transcript: String::new(),
            })?;
        let stdin = child.stdin.take();
        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(ExternalSession {
            child,
            stdin,
            lines: rx,
            timeout: Duration::from_secs(spec.timeout_secs),
            next_id: 1,
            transcript: Vec::new(),
        })
    }

    pub(crate) fn fit(
        spec: &ExternalSpec,
        ds: &Dataset,
        rows: &[usize],
        mask: &CoalitionMask,
        seed: u64,
    ) -> Result<Self> {
        let mut session = Self::spawn(spec)?;
        let x: Vec<Vec<f64>> = rows
            .iter()
            .map(|&i| ds.columns().iter().map(|c| c[i]).collect())
            .collect();
        let y: Vec<f64> = rows.iter().map(|&i| ds.y()[i]).collect();
        let mask_bits: Vec<u8> = mask.bits().iter().map(|&b| b as u8).collect();
        let id = session.take_id();
        let reply = session.call(
            json!({
                "cmd": "fit",
                "id": id,
                "X": x,
                "y": y,
                "mask": mask_bits,
                "seed": seed,
                "hyperparams": spec.hyperparams,
            }),
            id,
        )?;
        if reply.get("ok").and_then(Value::as_bool) != Some(true) {
            let why = reply
                .get("error")
                .map(|e| e.to_string())
                .unwrap_or_else(|| "fit reply without ok=true".into());
            return Err(session.protocol_error(format!("fit failed: {why}")));
        }
        Ok(session)
    }

    pub(crate) fn predict(&mut self, x: &[Vec<f64>]) -> Result<Vec<f64>> {
        let id = self.take_id();
        let reply = self.call(json!({"cmd": "predict", "id": id, "X": x}), id)?;
        let yhat = reply
            .get("yhat")
            .and_then(Value::as_array)
            .ok_or_else(|| {
                let why = reply.get("error").map(|e| e.to_string()).unwrap_or_else(|| "missing yhat".into());
                self.protocol_error(format!("predict failed: {why}"))
            })?;
        let out: Option<Vec<f64>> = yhat.iter().map(Value::as_f64).collect();
        let out = out.ok_or_else(|| self.protocol_error("non-numeric prediction".into()))?;
        if out.len() != x.len() {
            return Err(self.protocol_error(format!("expected {} predictions, got {}", x.len(), out.len())));
        }
        Ok(out)
    }

    fn take_id(&mut self) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    fn record(&mut self, dir: &str, line: &str) {
        let mut s: String = line.chars().take(TRANSCRIPT_LINE_CHARS).collect();
        if s.len() < line.len() {
            s.push_str("...");
        }
        self.transcript.push(format!("{dir} {s}"));
        if self.transcript.len() > TRANSCRIPT_LINES {
            self.transcript.remove(0);
        }
    }

    fn protocol_error(&self, message: String) -> Error {
        Error::Protocol {
            message,
            transcript: self.transcript.join("\n"),
        }
    }

    fn send(&mut self, msg: &Value) -> Result<()> {
        let line = msg.to_string();
        self.record(">", &line);
        let stdin = self.stdin.as_mut().ok_or_else(|| Error::Protocol {
            message: "learner stdin closed".into(),
            transcript: String::new(),
        })?;
        let res = writeln!(stdin, "{line}").and_then(|_| stdin.flush());
        res.map_err(|e| self.protocol_error(format!("write failed: {e}")))
    }

    fn call(&mut self, msg: Value, id: u64) -> Result<Value> {
        self.send(&msg)?;
        loop {
            let line = match self.lines.recv_timeout(self.timeout) {
                Ok(Ok(line)) => line,
                Ok(Err(e)) => return Err(self.protocol_error(format!("read failed: {e}"))),
                Err(RecvTimeoutError::Timeout) => {
                    return Err(self.protocol_error(format!("no reply within {:?}", self.timeout)))
                }
                Err(RecvTimeoutError::Disconnected) => {
                    return Err(self.protocol_error("learner process exited".into()))
                }
            };
            self.record("<", &line);
            if line.trim().is_empty() {
                continue;
            }
            let reply: Value = serde_json::from_str(&line)
                .map_err(|e| self.protocol_error(format!("malformed reply: {e}")))?;
            return match reply.get("id").and_then(Value::as_u64) {
                Some(got) if got == id => Ok(reply),
                other => Err(self.protocol_error(format!("reply id {other:?} does not match request id {id}"))),
            };
        }
    }
}

impl Drop for ExternalSession {
    fn drop(&mut self) {
        if let Some(mut stdin) = self.stdin.take() {
            let _ = writeln!(stdin, "{}", json!({"cmd": "shutdown"}));
            let _ = stdin.flush();
        }
        for _ in 0..50 {
            if let Ok(Some(_)) = self.child.try_wait() {
                return;
            }
            thread::sleep(Duration::from_millis(10));
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
