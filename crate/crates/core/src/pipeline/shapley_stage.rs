use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use super::manifest::{FoldDef, LoadedManifest, ShapleyModeName, SubjectEntry};
use super::output::{read_commented_csv, write_csv, write_json};
use super::validate::{load_subject, validate};
use super::{PipelineError, RunContext};
use crate::adapter::{build_predictor, AdapterSpec, Predictor};
use crate::metrics::{MetricId, MetricRegistry};
use crate::shapley::{explain_subject, AblationStrategy, ExplainRequest, PredictionCache, ShapleyError, ShapleyMatrix, ShapleyMode, SubjectVector};

#[derive(Debug, Clone, Default)]
pub struct ShapleyOptions {
    /// Worker threads; 0 uses all cores.
    pub jobs: usize,
    /// Reuse finished per-subject results from an earlier run.
    pub resume: bool,
    /// Largest tolerated fraction of failed subject computations.
    pub fail_threshold: f64,
    pub strategy: Option<AblationStrategy>,
    pub seed: Option<u64>,
    pub mode: Option<ShapleyModeName>,
    pub permutations: Option<usize>,
    pub cache_dir: Option<PathBuf>,
    /// Stop scheduling new work after this many fresh subject
    /// computations, as if the process had been killed.
    pub stop_after: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectFailure {
    pub model_id: String,
    pub fold: String,
    pub subject_id: String,
    /// `failed` (counts toward the threshold) or `skipped` (metric policy).
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ShapleySummary {
    pub total: usize,
    pub computed: usize,
    pub reused: usize,
    pub failures: Vec<SubjectFailure>,
    /// Predictions requested in this invocation; reused parts add nothing.
    pub adapter_calls: usize,
    pub coalitions_evaluated: usize,
    pub matrices: usize,
}

impl ShapleySummary {
    pub fn failed(&self) -> usize {
        self.failures.iter().filter(|f| f.kind == "failed").count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PartMetric {
    metric: MetricId,
    phi: Vec<f64>,
    stderr: Option<Vec<f64>>,
    per_label: Option<Vec<Vec<f64>>>,
    score: f64,
    empty_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
enum PartOutcome {
    Ok { metrics: Vec<PartMetric> },
    Skipped { reason: String },
}

/// Result of one (model, fold, subject), persisted as the resume unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SubjectPart {
    fingerprint: String,
    model_id: String,
    fold: String,
    subject_id: String,
    coalitions_evaluated: usize,
    adapter_calls: usize,
    #[serde(flatten)]
    outcome: PartOutcome,
}

struct Task<'a> {
    spec: &'a AdapterSpec,
    fold: &'a FoldDef,
    subject: &'a SubjectEntry,
}

enum TaskResult {
    Done { part: SubjectPart, reused: bool },
    Failed(String),
    NotRun,
}

fn part_path(dir: &Path, model: &str, fold: &str, subject: &str) -> PathBuf {
    dir.join("parts").join(model).join(fold).join(format!("{subject}.json"))
}

fn fingerprint(lm: &LoadedManifest, spec: &AdapterSpec, strategy: &AblationStrategy, mode: ShapleyMode, subject: &SubjectEntry) -> String {
    let m = &lm.manifest;
    let doc = json!({
        "model": spec,
        "metrics": m.metrics,
        "metric_config": m.metric_config,
        "strategy": strategy.cache_key(),
        "mode": mode,
        "channels": m.channels,
        "labels": m.label_set(),
        "input": subject.input,
        "gt": subject.gt,
    });
    hex::encode(Sha256::digest(doc.to_string().as_bytes()))
}

fn read_part(path: &Path, fingerprint: &str) -> Option<SubjectPart> {
    let text = std::fs::read_to_string(path).ok()?;
    let part: SubjectPart = serde_json::from_str(&text).ok()?;
    (part.fingerprint == fingerprint).then_some(part)
}

struct StageEnv<'a> {
    lm: &'a LoadedManifest,
    shapley_dir: PathBuf,
    strategy: AblationStrategy,
    mode: ShapleyMode,
    registry: MetricRegistry,
    cache_base: PathBuf,
    resume: bool,
    stop_after: Option<usize>,
    fresh: AtomicUsize,
    interrupted: AtomicBool,
}

impl StageEnv<'_> {
    fn run_task(&self, task: &Task, predictor: &dyn Predictor) -> TaskResult {
        let fp = fingerprint(self.lm, task.spec, &self.strategy, self.mode, task.subject);
        let path = part_path(&self.shapley_dir, &task.spec.model_id, &task.fold.fold_id, &task.subject.subject_id);
        if self.resume {
            if let Some(part) = read_part(&path, &fp) {
                return TaskResult::Done { part, reused: true };
            }
        }
        if let Some(limit) = self.stop_after {
            if self.fresh.fetch_add(1, Ordering::SeqCst) >= limit {
                self.interrupted.store(true, Ordering::SeqCst);
                return TaskResult::NotRun;
            }
        }
        match self.compute(task, predictor, fp) {
            Ok(part) => match write_json(&path, &part) {
                Ok(()) => TaskResult::Done { part, reused: false },
                Err(e) => TaskResult::Failed(e.to_string()),
            },
            Err(e) => TaskResult::Failed(e.to_string()),
        }
    }

    fn compute(&self, task: &Task, predictor: &dyn Predictor, fingerprint: String) -> Result<SubjectPart, PipelineError> {
        let (input, gt) = load_subject(self.lm, task.subject)?;
        let cache = PredictionCache::for_model(&self.cache_base, &task.spec.model_id, &self.strategy);
        let req = ExplainRequest {
            subject_id: &task.subject.subject_id,
            input: &input,
            gt: &gt,
            strategy: &self.strategy,
            cfg: &self.lm.manifest.metric_config,
            registry: &self.registry,
            cache: Some(&cache),
            mode: self.mode,
        };
        let base = |coalitions_evaluated, adapter_calls, outcome| SubjectPart {
            fingerprint: fingerprint.clone(),
            model_id: task.spec.model_id.clone(),
            fold: task.fold.fold_id.clone(),
            subject_id: task.subject.subject_id.clone(),
            coalitions_evaluated,
            adapter_calls,
            outcome,
        };
        match explain_subject(req, predictor, &self.lm.manifest.metrics) {
            Ok(exp) => Ok(base(
                exp.coalitions_evaluated,
                exp.adapter_calls,
                PartOutcome::Ok {
                    metrics: exp
                        .metrics
                        .into_iter()
                        .map(|m| PartMetric {
                            metric: m.metric,
                            phi: m.values,
                            stderr: m.stderr,
                            per_label: m.per_label,
                            score: m.score,
                            empty_value: m.empty_value,
                        })
                        .collect(),
                },
            )),
            Err(ShapleyError::SubjectSkipped { reason, .. }) => Ok(base(0, 0, PartOutcome::Skipped { reason })),
            Err(e) => Err(e.into()),
        }
    }
}

fn build_pool(threads: usize) -> Result<rayon::ThreadPool, PipelineError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| PipelineError::Config(format!("thread pool: {e}")))
}

/// One row of the long-format Shapley table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LongRow {
    pub metric: MetricId,
    pub model: String,
    pub fold: String,
    pub subject_id: String,
    pub contrast: String,
    pub phi: f64,
    pub score: f64,
}

pub const LONG_COLUMNS: [&str; 7] = ["metric", "model", "fold", "subject_id", "contrast", "phi", "score"];

/// Computes Shapley vectors for every (model, fold, subject) and writes the
/// matrices and long table. Per-subject failures are recorded and only fail
/// the run when their rate exceeds `fail_threshold`; the outputs are written
/// either way.
pub fn run_shapley(ctx: &RunContext, opts: &ShapleyOptions) -> Result<ShapleySummary, PipelineError> {
    let lm = &ctx.manifest;
    let m = &lm.manifest;
    let report = validate(lm, true);
    if !report.is_ok() {
        return Err(PipelineError::Validation(report));
    }
    let strategy = match &opts.strategy {
        Some(s) => s.clone(),
        None => m.shapley.strategy()?,
    };
    let mut settings = m.shapley.clone();
    if let Some(mode) = opts.mode {
        settings.mode = mode;
    }
    if let Some(p) = opts.permutations {
        settings.permutations = p;
    }
    if let Some(seed) = opts.seed {
        settings.seed = seed;
    }
    let env = StageEnv {
        lm,
        shapley_dir: ctx.shapley_dir(),
        strategy,
        mode: settings.mode(),
        registry: MetricRegistry::default(),
        cache_base: ctx.cache_base(opts.cache_dir.as_deref()),
        resume: opts.resume,
        stop_after: opts.stop_after,
        fresh: AtomicUsize::new(0),
        interrupted: AtomicBool::new(false),
    };
    let jobs = if opts.jobs == 0 { rayon::current_num_threads() } else { opts.jobs };
    let label_set = m.label_set();

    let mut summary = ShapleySummary::default();
    let mut parts: Vec<SubjectPart> = Vec::new();
    for spec in &m.models {
        let predictor: Arc<dyn Predictor> = build_predictor(spec, &lm.dir, &label_set)?;
        let threads = predictor.max_parallel().map_or(jobs, |cap| cap.clamp(1, jobs));
        let tasks: Vec<Task> = m
            .folds
            .iter()
            .flat_map(|fold| fold.subjects.iter().map(move |subject| Task { spec, fold, subject }))
            .collect();
        let pool = build_pool(threads)?;
        let results: Vec<TaskResult> = pool.install(|| tasks.par_iter().map(|t| env.run_task(t, predictor.as_ref())).collect());
        for (task, result) in tasks.iter().zip(results) {
            summary.total += 1;
            let failure = |kind: &str, message: String| SubjectFailure {
                model_id: spec.model_id.clone(),
                fold: task.fold.fold_id.clone(),
                subject_id: task.subject.subject_id.clone(),
                kind: kind.into(),
                message,
            };
            match result {
                TaskResult::Done { part, reused } => {
                    if reused {
                        summary.reused += 1;
                    } else {
                        summary.computed += 1;
                        summary.adapter_calls += part.adapter_calls;
                        summary.coalitions_evaluated += part.coalitions_evaluated;
                    }
                    if let PartOutcome::Skipped { reason } = &part.outcome {
                        summary.failures.push(failure("skipped", reason.clone()));
                    }
                    parts.push(part);
                }
                TaskResult::Failed(message) => {
                    log::error!("{} / {} / {}: {message}", spec.model_id, task.fold.fold_id, task.subject.subject_id);
                    summary.failures.push(failure("failed", message));
                }
                TaskResult::NotRun => {}
            }
        }
        if env.interrupted.load(Ordering::SeqCst) {
            return Err(PipelineError::Interrupted {
                completed: summary.computed,
            });
        }
    }

    summary.matrices = write_outputs(ctx, &parts)?;
    let failure_rows = summary.failures.iter().map(|f| {
        vec![
            f.model_id.clone(),
            f.fold.clone(),
            f.subject_id.clone(),
            f.kind.clone(),
            f.message.clone(),
        ]
    });
    let header: Vec<String> = ["model", "fold", "subject_id", "kind", "message"].map(String::from).to_vec();
    write_csv(&ctx.shapley_dir().join("failures.csv"), &ctx.provenance_comment(), &header, failure_rows)?;

    let failed = summary.failed();
    let rate = if summary.total == 0 { 0.0 } else { failed as f64 / summary.total as f64 };
    if rate > opts.fail_threshold {
        return Err(PipelineError::PartialFailure {
            failed,
            total: summary.total,
            rate,
            threshold: opts.fail_threshold,
        });
    }
    Ok(summary)
}

fn write_outputs(ctx: &RunContext, parts: &[SubjectPart]) -> Result<usize, PipelineError> {
    let m = &ctx.manifest.manifest;
    let comment = ctx.provenance_comment();
    let dir = ctx.shapley_dir();
    let index: HashMap<(&str, &str, &str), &SubjectPart> = parts
        .iter()
        .map(|p| ((p.model_id.as_str(), p.fold.as_str(), p.subject_id.as_str()), p))
        .collect();
    let mut long = Vec::new();
    let mut matrices = 0;
    for (mi, metric) in m.metrics.iter().enumerate() {
        for spec in &m.models {
            for fold in &m.folds {
                let mut vectors = Vec::new();
                let mut scores = Vec::new();
                for subject in &fold.subjects {
                    let found = index.get(&(spec.model_id.as_str(), fold.fold_id.as_str(), subject.subject_id.as_str()));
                    let Some(SubjectPart {
                        outcome: PartOutcome::Ok { metrics },
                        ..
                    }) = found
                    else {
                        continue;
                    };
                    let pm = &metrics[mi];
                    vectors.push(SubjectVector {
                        subject_id: subject.subject_id.clone(),
                        model_id: spec.model_id.clone(),
                        fold: fold.fold_id.clone(),
                        metric: metric.clone(),
                        values: pm.phi.clone(),
                    });
                    scores.push(pm.score);
                }
                if vectors.is_empty() {
                    continue;
                }
                for (v, score) in vectors.iter().zip(&scores) {
                    for (contrast, phi) in m.channels.iter().zip(&v.values) {
                        long.push(vec![
                            metric.to_string(),
                            spec.model_id.clone(),
                            fold.fold_id.clone(),
                            v.subject_id.clone(),
                            contrast.clone(),
                            phi.to_string(),
                            score.to_string(),
                        ]);
                    }
                }
                let matrix = ShapleyMatrix::from_vectors(m.channels.clone(), &vectors)?;
                let mut header = vec!["contrast".to_string()];
                header.extend(matrix.subjects.iter().cloned());
                let rows = (0..matrix.contrasts.len()).map(|i| {
                    let mut row = vec![matrix.contrasts[i].clone()];
                    row.extend(matrix.row(i).iter().map(|v| v.to_string()));
                    row
                });
                let path = dir
                    .join("matrices")
                    .join(metric.name())
                    .join(&spec.model_id)
                    .join(format!("{}.csv", fold.fold_id));
                write_csv(&path, &comment, &header, rows)?;
                matrices += 1;
            }
        }
    }
    let header: Vec<String> = LONG_COLUMNS.map(String::from).to_vec();
    write_csv(&dir.join("shapley_long.csv"), &comment, &header, long)?;
    Ok(matrices)
}

/// Reads `<shapley_dir>/shapley_long.csv`.
pub fn load_long_table(shapley_dir: &Path) -> Result<Vec<LongRow>, PipelineError> {
    let path = shapley_dir.join("shapley_long.csv");
    if !path.exists() {
        return Err(PipelineError::MissingStage("shapley".into()));
    }
    let table = read_commented_csv(&path)?;
    if table.header != LONG_COLUMNS {
        return Err(PipelineError::table(&path, format!("unexpected columns {:?}", table.header)));
    }
    table
        .rows
        .iter()
        .map(|r| {
            let num = |s: &str| s.parse::<f64>().map_err(|e| PipelineError::table(&path, format!("{s:?}: {e}")));
            Ok(LongRow {
                metric: r[0].parse().map_err(|e| PipelineError::table(&path, e))?,
                model: r[1].clone(),
                fold: r[2].clone(),
                subject_id: r[3].clone(),
                contrast: r[4].clone(),
                phi: num(&r[5])?,
                score: num(&r[6])?,
            })
        })
        .collect()
}

/// Rebuilds the matrices from long rows, in first-appearance order.
pub(crate) fn matrices_from_long(rows: &[LongRow]) -> Result<Vec<ShapleyMatrix>, PipelineError> {
    let mut out: Vec<ShapleyMatrix> = Vec::new();
    let mut per_matrix: Vec<Vec<&LongRow>> = Vec::new();
    for r in rows {
        let pos = out
            .iter()
            .position(|m| m.metric == r.metric && m.model_id == r.model && m.fold == r.fold);
        match pos {
            Some(p) => per_matrix[p].push(r),
            None => {
                out.push(ShapleyMatrix {
                    metric: r.metric.clone(),
                    model_id: r.model.clone(),
                    fold: r.fold.clone(),
                    contrasts: vec![],
                    subjects: vec![],
                    values: vec![],
                });
                per_matrix.push(vec![r]);
            }
        }
    }
    for (matrix, rows) in out.iter_mut().zip(per_matrix) {
        let mut contrasts: Vec<String> = Vec::new();
        let mut subjects: Vec<String> = Vec::new();
        for r in &rows {
            if !contrasts.contains(&r.contrast) {
                contrasts.push(r.contrast.clone());
            }
            if !subjects.contains(&r.subject_id) {
                subjects.push(r.subject_id.clone());
            }
        }
        let j = subjects.len();
        let mut values = vec![f64::NAN; contrasts.len() * j];
        for r in &rows {
            let i = contrasts.iter().position(|c| *c == r.contrast).expect("collected");
            let s = subjects.iter().position(|x| *x == r.subject_id).expect("collected");
            values[i * j + s] = r.phi;
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(PipelineError::Config(format!(
                "long table is missing cells for metric {}, model {}, fold {}",
                matrix.metric, matrix.model_id, matrix.fold
            )));
        }
        matrix.contrasts = contrasts;
        matrix.subjects = subjects;
        matrix.values = values;
    }
    Ok(out)
}
