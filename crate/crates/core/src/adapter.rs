//! Black-box segmentation models behind one prediction interface.
//!
//! Three backends:
//! - **store**: precomputed predictions at `<dir>/<subject_id>/<bitmask>.seg`;
//! - **subprocess**: an external process speaking newline-delimited JSON on
//!   stdin/stdout, with volumes exchanged as MCV1/SEG1 files;
//! - **synthetic**: analytic test models whose channels each reveal one
//!   region of the ground truth.
//!
//! Subprocess protocol (one request in flight per process):
//!
//! ```text
//! -> {"op":"hello"}
//! <- {"status":"ok","protocol":1}
//! -> {"op":"predict","subject":"s01","coalition":5,"input":"/tmp/..mcv","output":"/tmp/..seg"}
//! <- {"status":"ok"}            (SEG1 written to `output`)
//! <- {"status":"error","message":"..."}
//! ```

use std::collections::VecDeque;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::shapley::Coalition;
use crate::volume::{self, LabelMap, MultiContrastVolume, VolumeError};

pub const PROTOCOL_VERSION: u64 = 1;
const STDERR_TAIL: usize = 2048;

#[derive(Debug, Error)]
pub enum AdapterError {
    #[error("no stored prediction for subject {subject} coalition {bits}")]
    MissingPrediction { subject: String, bits: u32 },
    #[error("adapter did not answer within {0:?}")]
    AdapterTimeout(Duration),
    #[error("protocol violation: {0}")]
    ProtocolViolation(String),
    #[error("adapter exited with code {code:?}: {stderr}")]
    NonzeroExit { code: Option<i32>, stderr: String },
    #[error("adapter reported an error: {0}")]
    Remote(String),
    #[error("prediction geometry {got:?} does not match input {expected:?}")]
    GeometryMismatch { expected: [usize; 3], got: [usize; 3] },
    #[error("cannot launch adapter {command:?}: {source}")]
    Spawn {
        command: Vec<String>,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid adapter spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Volume(#[from] VolumeError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// Capability report; failures are described, never raised.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub model_id: String,
    pub reachable: bool,
    pub reason: Option<String>,
    /// `None` means no parallelism limit.
    pub max_parallel: Option<usize>,
    pub protocol: Option<u64>,
}

/// A segmentation model as a black box: ablated input in, label map out.
pub trait Predictor: Send + Sync {
    fn model_id(&self) -> &str;

    /// Predicts a segmentation for an input whose channels outside
    /// `coalition` have already been ablated.
    fn predict(&self, subject_id: &str, input: &MultiContrastVolume, coalition: Coalition) -> Result<LabelMap, AdapterError>;

    /// Concurrent requests the backend can serve; `None` = unlimited.
    fn max_parallel(&self) -> Option<usize> {
        None
    }

    fn probe(&self) -> ProbeReport;
}

fn check_geometry(input: &MultiContrastVolume, map: &LabelMap) -> Result<(), AdapterError> {
    if input.dims() != map.dims() {
        return Err(AdapterError::GeometryMismatch {
            expected: input.dims().as_array(),
            got: map.dims().as_array(),
        });
    }
    Ok(())
}

fn default_timeout() -> f64 {
    300.0
}

fn default_parallel() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdapterSpec {
    pub model_id: String,
    #[serde(flatten)]
    pub backend: Backend,
    /// Per-prediction timeout in seconds.
    #[serde(default = "default_timeout")]
    pub timeout_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "snake_case")]
pub enum Backend {
    Store {
        dir: PathBuf,
    },
    Subprocess {
        command: Vec<String>,
        #[serde(default = "default_parallel")]
        max_parallel: usize,
    },
    Synthetic {
        model: SyntheticModelKind,
        #[serde(default)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SyntheticModelKind {
    /// Channel `i` reveals region `R_i`; the prediction is the union over
    /// channels in the coalition.
    UnionReveal,
    /// `UnionReveal` plus seeded per-voxel label noise at rate `rate`.
    NoisyUnion { rate: f64 },
    /// `UnionReveal` with channel `channel` contributing nothing.
    IgnoreChannel { channel: usize },
}

/// Builds the predictor described by `spec`. Relative paths resolve
/// against `base_dir`; synthetic models emit maps over `label_set`.
pub fn build_predictor(spec: &AdapterSpec, base_dir: &Path, label_set: &[u8]) -> Result<Arc<dyn Predictor>, AdapterError> {
    if spec.model_id.is_empty() || spec.model_id.contains(['/', '\\']) {
        return Err(AdapterError::InvalidSpec(format!("bad model id {:?}", spec.model_id)));
    }
    if !(spec.timeout_s > 0.0 && spec.timeout_s.is_finite()) {
        return Err(AdapterError::InvalidSpec(format!("timeout_s must be positive, got {}", spec.timeout_s)));
    }
    Ok(match &spec.backend {
        Backend::Store { dir } => Arc::new(StorePredictor::new(&spec.model_id, base_dir.join(dir))),
        Backend::Subprocess { command, max_parallel } => Arc::new(SubprocessPredictor::new(
            &spec.model_id,
            command.clone(),
            *max_parallel,
            Duration::from_secs_f64(spec.timeout_s),
            base_dir,
        )?),
        Backend::Synthetic { model, seed } => Arc::new(SyntheticPredictor::new(&spec.model_id, *model, *seed, label_set.to_vec())?),
    })
}

/// Precomputed predictions on disk.
#[derive(Debug, Clone)]
pub struct StorePredictor {
    model_id: String,
    dir: PathBuf,
}

impl StorePredictor {
    pub fn new(model_id: &str, dir: impl Into<PathBuf>) -> Self {
        Self {
            model_id: model_id.to_string(),
            dir: dir.into(),
        }
    }

    pub fn path(&self, subject_id: &str, coalition: Coalition) -> PathBuf {
        self.dir.join(subject_id).join(format!("{}.seg", coalition.bits()))
    }
}

impl Predictor for StorePredictor {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn predict(&self, subject_id: &str, input: &MultiContrastVolume, coalition: Coalition) -> Result<LabelMap, AdapterError> {
        let path = self.path(subject_id, coalition);
        if !path.is_file() {
            return Err(AdapterError::MissingPrediction {
                subject: subject_id.to_string(),
                bits: coalition.bits(),
            });
        }
        let map = volume::read_seg(&path)?;
        check_geometry(input, &map)?;
        Ok(map)
    }

    fn probe(&self) -> ProbeReport {
        let reachable = self.dir.is_dir();
        ProbeReport {
            model_id: self.model_id.clone(),
            reachable,
            reason: (!reachable).then(|| format!("store directory {} does not exist", self.dir.display())),
            max_parallel: None,
            protocol: None,
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn fnv1a(s: &str) -> u64 {
    s.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Reads the label a channel reveals at a voxel: the channel value rounded
/// to the nearest declared label, or background.
pub fn decode_revealed_label(value: f32, label_set: &[u8]) -> u8 {
    if !(value >= 0.5) {
        return 0;
    }
    let r = value.round();
    if r > 255.0 {
        return 0;
    }
    let l = r as u8;
    if label_set.contains(&l) {
        l
    } else {
        0
    }
}

/// Analytic test model. Input channel `i` encodes region `R_i`: voxels of
/// `R_i` carry their ground-truth label as the channel value, all other
/// voxels are 0. The prediction is the union of the regions of channels in
/// the coalition (largest label wins on overlap).
#[derive(Debug, Clone)]
pub struct SyntheticPredictor {
    model_id: String,
    kind: SyntheticModelKind,
    seed: u64,
    label_set: Vec<u8>,
}

impl SyntheticPredictor {
    pub fn new(model_id: &str, kind: SyntheticModelKind, seed: u64, mut label_set: Vec<u8>) -> Result<Self, AdapterError> {
        if let SyntheticModelKind::NoisyUnion { rate } = kind {
            if !(0.0..=1.0).contains(&rate) {
                return Err(AdapterError::InvalidSpec(format!("noise rate {rate} outside [0, 1]")));
            }
        }
        label_set.sort_unstable();
        label_set.dedup();
        Ok(Self {
            model_id: model_id.to_string(),
            kind,
            seed,
            label_set,
        })
    }

    pub fn kind(&self) -> SyntheticModelKind {
        self.kind
    }
}

impl Predictor for SyntheticPredictor {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn predict(&self, subject_id: &str, input: &MultiContrastVolume, coalition: Coalition) -> Result<LabelMap, AdapterError> {
        if coalition.players() != input.channels() {
            return Err(AdapterError::ProtocolViolation(format!(
                "coalition over {} channels for a {}-channel input",
                coalition.players(),
                input.channels()
            )));
        }
        let nvox = input.dims().len();
        let mut labels = vec![0u8; nvox];
        for c in coalition.members() {
            if let SyntheticModelKind::IgnoreChannel { channel } = self.kind {
                if channel == c {
                    continue;
                }
            }
            for (out, &v) in labels.iter_mut().zip(input.channel(c)) {
                *out = (*out).max(decode_revealed_label(v, &self.label_set));
            }
        }
        if let SyntheticModelKind::NoisyUnion { rate } = self.kind {
            let base = self.seed ^ fnv1a(subject_id);
            let choices = self.label_set.len() as u64 + 1;
            for (i, out) in labels.iter_mut().enumerate() {
                let h = splitmix64(base ^ splitmix64(i as u64));
                let u = (h >> 11) as f64 / (1u64 << 53) as f64;
                if u < rate {
                    let pick = splitmix64(h) % choices;
                    *out = if pick == 0 { 0 } else { self.label_set[pick as usize - 1] };
                }
            }
        }
        Ok(LabelMap::new(input.dims(), input.spacing(), self.label_set.clone(), labels)?)
    }

    fn probe(&self) -> ProbeReport {
        ProbeReport {
            model_id: self.model_id.clone(),
            reachable: true,
            reason: None,
            max_parallel: None,
            protocol: None,
        }
    }
}

struct Worker {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
    stderr_tail: Arc<Mutex<VecDeque<u8>>>,
}

impl Worker {
    fn spawn(command: &[String], cwd: &Path) -> Result<Worker, AdapterError> {
        let (program, args) = command
            .split_first()
            .ok_or_else(|| AdapterError::InvalidSpec("empty subprocess command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .current_dir(cwd)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|source| AdapterError::Spawn {
                command: command.to_vec(),
                source,
            })?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let mut stderr = child.stderr.take().expect("piped stderr");

        let (tx, lines) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });
        let stderr_tail = Arc::new(Mutex::new(VecDeque::with_capacity(STDERR_TAIL)));
        let tail = Arc::clone(&stderr_tail);
        std::thread::spawn(move || {
            let mut buf = [0u8; 1024];
            while let Ok(n) = stderr.read(&mut buf) {
                if n == 0 {
                    break;
                }
                let mut t = tail.lock().unwrap();
                t.extend(&buf[..n]);
                while t.len() > STDERR_TAIL {
                    t.pop_front();
                }
            }
        });
        Ok(Worker {
            child,
            stdin,
            lines,
            stderr_tail,
        })
    }

    fn exit_error(&mut self) -> AdapterError {
        // give the stderr reader a moment to drain
        let status = (0..50).find_map(|_| match self.child.try_wait() {
            Ok(Some(s)) => Some(s),
            _ => {
                std::thread::sleep(Duration::from_millis(10));
                None
            }
        });
        std::thread::sleep(Duration::from_millis(20));
        let stderr = String::from_utf8_lossy(&self.stderr_tail.lock().unwrap().iter().copied().collect::<Vec<_>>()).trim().to_string();
        AdapterError::NonzeroExit {
            code: status.and_then(|s| s.code()),
            stderr,
        }
    }

    fn exchange(&mut self, request: &Value, timeout: Duration) -> Result<Value, AdapterError> {
        let mut line = request.to_string();
        line.push('\n');
        if self.stdin.write_all(line.as_bytes()).and_then(|_| self.stdin.flush()).is_err() {
            return Err(self.exit_error());
        }
        match self.lines.recv_timeout(timeout) {
            Ok(Ok(reply)) => serde_json::from_str(&reply)
                .map_err(|e| AdapterError::ProtocolViolation(format!("reply is not JSON ({e}): {reply:?}"))),
            Ok(Err(e)) => Err(AdapterError::Io(e)),
            Err(RecvTimeoutError::Timeout) => Err(AdapterError::AdapterTimeout(timeout)),
            Err(RecvTimeoutError::Disconnected) => Err(self.exit_error()),
        }
    }

    fn handshake(&mut self, timeout: Duration) -> Result<u64, AdapterError> {
        let reply = self.exchange(&json!({"op": "hello"}), timeout)?;
        if reply.get("status").and_then(Value::as_str) != Some("ok") {
            return Err(AdapterError::ProtocolViolation(format!("handshake rejected: {reply}")));
        }
        match reply.get("protocol").and_then(Value::as_u64) {
            Some(PROTOCOL_VERSION) => Ok(PROTOCOL_VERSION),
            Some(v) => Err(AdapterError::ProtocolViolation(format!(
                "protocol version {v} unsupported (expected {PROTOCOL_VERSION})"
            ))),
            None => Err(AdapterError::ProtocolViolation(format!("handshake reply lacks protocol: {reply}"))),
        }
    }
}

impl Drop for Worker {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

struct Pool {
    idle: Vec<Worker>,
    live: usize,
}

/// External process speaking the JSON-lines protocol. Up to
/// `max_parallel` processes are kept, each serving one request at a time.
pub struct SubprocessPredictor {
    model_id: String,
    command: Vec<String>,
    cwd: PathBuf,
    max_parallel: usize,
    timeout: Duration,
    scratch: tempfile::TempDir,
    counter: AtomicU64,
    pool: Mutex<Pool>,
    freed: Condvar,
}

impl SubprocessPredictor {
    pub fn new(model_id: &str, command: Vec<String>, max_parallel: usize, timeout: Duration, cwd: &Path) -> Result<Self, AdapterError> {
        if command.is_empty() {
            return Err(AdapterError::InvalidSpec("empty subprocess command".into()));
        }
        if max_parallel == 0 {
            return Err(AdapterError::InvalidSpec("max_parallel must be >= 1".into()));
        }
        Ok(Self {
            model_id: model_id.to_string(),
            command,
            cwd: cwd.to_path_buf(),
            max_parallel,
            timeout,
            scratch: tempfile::Builder::new().prefix("coalshap-adapter").tempdir()?,
            counter: AtomicU64::new(0),
            pool: Mutex::new(Pool { idle: Vec::new(), live: 0 }),
            freed: Condvar::new(),
        })
    }

    fn acquire(&self) -> Result<Worker, AdapterError> {
        let mut pool = self.pool.lock().unwrap();
        loop {
            if let Some(w) = pool.idle.pop() {
                return Ok(w);
            }
            if pool.live < self.max_parallel {
                pool.live += 1;
                drop(pool);
                let spawned = Worker::spawn(&self.command, &self.cwd).and_then(|mut w| {
                    w.handshake(self.timeout)?;
                    Ok(w)
                });
                if spawned.is_err() {
                    self.pool.lock().unwrap().live -= 1;
                    self.freed.notify_one();
                }
                return spawned;
            }
            pool = self.freed.wait(pool).unwrap();
        }
    }

    fn release(&self, worker: Worker, healthy: bool) {
        let mut pool = self.pool.lock().unwrap();
        if healthy {
            pool.idle.push(worker);
        } else {
            pool.live -= 1;
            drop(pool);
            drop(worker);
        }
        self.freed.notify_one();
    }
}

impl Predictor for SubprocessPredictor {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn predict(&self, subject_id: &str, input: &MultiContrastVolume, coalition: Coalition) -> Result<LabelMap, AdapterError> {
        let id = self.counter.fetch_add(1, Ordering::Relaxed);
        let in_path = self.scratch.path().join(format!("{id}-in.mcv"));
        let out_path = self.scratch.path().join(format!("{id}-out.seg"));
        volume::write_mcv(input, &in_path)?;
        let request = json!({
            "op": "predict",
            "subject": subject_id,
            "coalition": coalition.bits(),
            "input": in_path,
            "output": out_path,
        });
        let mut worker = self.acquire()?;
        let reply = worker.exchange(&request, self.timeout);
        let healthy = matches!(reply, Ok(_));
        self.release(worker, healthy);
        let _ = std::fs::remove_file(&in_path);
        let reply = reply?;
        let result = match reply.get("status").and_then(Value::as_str) {
            Some("ok") => volume::read_seg(&out_path)
                .map_err(AdapterError::from)
                .and_then(|map| check_geometry(input, &map).map(|_| map)),
            Some("error") => Err(AdapterError::Remote(
                reply.get("message").and_then(Value::as_str).unwrap_or("").to_string(),
            )),
            _ => Err(AdapterError::ProtocolViolation(format!("unexpected reply {reply}"))),
        };
        let _ = std::fs::remove_file(&out_path);
        result
    }

    fn max_parallel(&self) -> Option<usize> {
        Some(self.max_parallel)
    }

    fn probe(&self) -> ProbeReport {
        let outcome = Worker::spawn(&self.command, &self.cwd).and_then(|mut w| w.handshake(self.timeout));
        ProbeReport {
            model_id: self.model_id.clone(),
            reachable: outcome.is_ok(),
            reason: outcome.as_ref().err().map(|e| e.to_string()),
            max_parallel: Some(self.max_parallel),
            protocol: outcome.ok(),
        }
    }
}

/// Probes the backend an `AdapterSpec` describes without raising.
pub fn probe(spec: &AdapterSpec, base_dir: &Path, label_set: &[u8]) -> ProbeReport {
    match build_predictor(spec, base_dir, label_set) {
        Ok(p) => p.probe(),
        Err(e) => ProbeReport {
            model_id: spec.model_id.clone(),
            reachable: false,
            reason: Some(e.to_string()),
            max_parallel: None,
            protocol: None,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::{Dims, Spacing};

    fn encoded_input() -> MultiContrastVolume {
        // 1x1x8, four channels each revealing two voxels of label 1..=2
        let names = ["t1n", "t1c", "t2w", "t2f"].map(String::from).to_vec();
        let mut data = vec![0.0f32; 32];
        for c in 0..4 {
            data[c * 8 + 2 * c] = 1.0;
            data[c * 8 + 2 * c + 1] = 2.0;
        }
        MultiContrastVolume::new(names, Dims::new(1, 1, 8), Spacing::UNIT, data).unwrap()
    }

    #[test]
    fn spec_json_shapes() {
        let specs: Vec<AdapterSpec> = serde_json::from_str(
            r#"[
              {"model_id":"unet","backend":"store","dir":"predictions/unet"},
              {"model_id":"ext","backend":"subprocess","command":["python3","a.py"],"max_parallel":2,"timeout_s":5},
              {"model_id":"syn","backend":"synthetic","model":{"kind":"noisy_union","rate":0.1},"seed":3}
            ]"#,
        )
        .unwrap();
        assert_eq!(specs[0].timeout_s, 300.0);
        assert!(matches!(specs[1].backend, Backend::Subprocess { max_parallel: 2, .. }));
        assert_eq!(
            specs[2].backend,
            Backend::Synthetic { model: SyntheticModelKind::NoisyUnion { rate: 0.1 }, seed: 3 }
        );
        let back: AdapterSpec = serde_json::from_str(&serde_json::to_string(&specs[2]).unwrap()).unwrap();
        assert_eq!(back, specs[2]);
    }

    #[test]
    fn union_reveal_semantics() {
        let p = SyntheticPredictor::new("syn", SyntheticModelKind::UnionReveal, 0, vec![1, 2, 3]).unwrap();
        let input = encoded_input();
        let empty = p.predict("s", &input, Coalition::empty(4)).unwrap();
        assert!(empty.labels().iter().all(|&l| l == 0));
        let c = Coalition::new(0b0101, 4).unwrap();
        let m = p.predict("s", &input, c).unwrap();
        assert_eq!(m.labels(), &[1, 2, 0, 0, 1, 2, 0, 0]);
        let full = p.predict("s", &input, Coalition::full(4)).unwrap();
        assert_eq!(full.labels(), &[1, 2, 1, 2, 1, 2, 1, 2]);
    }

    #[test]
    fn ignore_channel_and_noise() {
        let input = encoded_input();
        let p = SyntheticPredictor::new("syn", SyntheticModelKind::IgnoreChannel { channel: 1 }, 0, vec![1, 2, 3]).unwrap();
        let full = p.predict("s", &input, Coalition::full(4)).unwrap();
        assert_eq!(full.labels(), &[1, 2, 0, 0, 1, 2, 1, 2]);
        let noisy = SyntheticPredictor::new("syn", SyntheticModelKind::NoisyUnion { rate: 1.0 }, 9, vec![1, 2, 3]).unwrap();
        let a = noisy.predict("s", &input, Coalition::full(4)).unwrap();
        let b = noisy.predict("s", &input, Coalition::full(4)).unwrap();
        assert_eq!(a, b);
        let quiet = SyntheticPredictor::new("syn", SyntheticModelKind::NoisyUnion { rate: 0.0 }, 9, vec![1, 2, 3]).unwrap();
        assert_eq!(quiet.predict("s", &input, Coalition::full(4)).unwrap(), full_union(&input));
        assert!(SyntheticPredictor::new("syn", SyntheticModelKind::NoisyUnion { rate: 1.5 }, 0, vec![1]).is_err());
    }

    fn full_union(input: &MultiContrastVolume) -> LabelMap {
        SyntheticPredictor::new("u", SyntheticModelKind::UnionReveal, 0, vec![1, 2, 3])
            .unwrap()
            .predict("s", input, Coalition::full(4))
            .unwrap()
    }

    #[test]
    fn store_backend() {
        let dir = tempfile::tempdir().unwrap();
        let input = encoded_input();
        let stored = full_union(&input);
        volume::write_seg(&stored, dir.path().join("subj01/15.seg")).unwrap();
        let p = StorePredictor::new("unet", dir.path());
        assert_eq!(p.predict("subj01", &input, Coalition::full(4)).unwrap(), stored);
        assert!(matches!(
            p.predict("subj01", &input, Coalition::empty(4)),
            Err(AdapterError::MissingPrediction { bits: 0, .. })
        ));
        assert!(p.probe().reachable);
        let missing = StorePredictor::new("unet", dir.path().join("nope"));
        let report = missing.probe();
        assert!(!report.reachable);
        assert!(report.reason.unwrap().contains("does not exist"));
    }

    #[test]
    fn synthetic_probe_is_unlimited() {
        let spec = AdapterSpec {
            model_id: "syn".into(),
            backend: Backend::Synthetic { model: SyntheticModelKind::UnionReveal, seed: 0 },
            timeout_s: 1.0,
        };
        let r = probe(&spec, Path::new("."), &[1]);
        assert!(r.reachable);
        assert_eq!(r.max_parallel, None);
    }

    #[test]
    fn decode_label() {
        assert_eq!(decode_revealed_label(0.0, &[1, 2, 3]), 0);
        assert_eq!(decode_revealed_label(2.2, &[1, 2, 3]), 2);
        assert_eq!(decode_revealed_label(7.0, &[1, 2, 3]), 0);
        assert_eq!(decode_revealed_label(f32::NAN, &[1, 2, 3]), 0);
    }
}
