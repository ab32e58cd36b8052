//! Channel-level Shapley values over the coalition lattice.
//!
//! A coalition is the set of input channels left intact; every other
//! channel is ablated before the model sees the volume. The value of a
//! coalition is a segmentation metric of the resulting prediction, and a
//! channel's Shapley value is its weighted average marginal contribution
//! over all coalitions that exclude it.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adapter::{AdapterError, Predictor};
use crate::metrics::{MetricConfig, MetricError, MetricId, MetricRegistry};
use crate::volume::{self, LabelMap, MultiContrastVolume, VolumeError};

/// Largest channel count for which the full lattice is enumerated.
pub const MAX_EXACT_PLAYERS: usize = 20;

type BoxError = Box<dyn std::error::Error + Send + Sync>;

#[derive(Debug, Error)]
pub enum ShapleyError {
    #[error("exact enumeration supports at most {MAX_EXACT_PLAYERS} players, got {0}")]
    Overflow(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("value function failed on coalition {bits:#b}: {source}")]
    ValueFnFailure {
        bits: u32,
        #[source]
        source: BoxError,
    },
    #[error("coalition has {coalition} channels but the volume has {volume}")]
    ChannelCountMismatch { coalition: usize, volume: usize },
    #[error("adapter failed on subject {subject} coalition {bits}: {source}")]
    AdapterFailure {
        subject: String,
        bits: u32,
        #[source]
        source: AdapterError,
    },
    #[error("subject {subject} skipped: {reason}")]
    SubjectSkipped { subject: String, reason: String },
    #[error("metric error on coalition {bits}: {source}")]
    Metric {
        bits: u32,
        #[source]
        source: MetricError,
    },
    #[error("prediction cache: {0}")]
    Cache(#[from] VolumeError),
}

/// Subset of channels, bit `i` set when channel `i` is present.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Coalition {
    bits: u32,
    n: u8,
}

impl Coalition {
    pub fn new(bits: u32, n: usize) -> Result<Self, ShapleyError> {
        if n == 0 || n > 31 {
            return Err(ShapleyError::InvalidArgument(format!("player count {n} outside 1..=31")));
        }
        if bits >> n != 0 {
            return Err(ShapleyError::InvalidArgument(format!("bitmask {bits:#b} exceeds {n} players")));
        }
        Ok(Self { bits, n: n as u8 })
    }

    pub fn empty(n: usize) -> Self {
        Self::new(0, n).expect("valid player count")
    }

    pub fn full(n: usize) -> Self {
        Self::new(((1u64 << n) - 1) as u32, n).expect("valid player count")
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn players(&self) -> usize {
        self.n as usize
    }

    pub fn size(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn contains(&self, i: usize) -> bool {
        self.bits >> i & 1 == 1
    }

    pub fn with(&self, i: usize) -> Self {
        Self { bits: self.bits | 1 << i, n: self.n }
    }

    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.players()).filter(|&i| self.contains(i))
    }

    /// All `2^n` coalitions in bitmask order.
    pub fn all(n: usize) -> impl Iterator<Item = Coalition> {
        let n8 = n as u8;
        (0..1u32 << n).map(move |bits| Coalition { bits, n: n8 })
    }
}

impl fmt::Display for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.members().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

fn binomial(n: u64, k: u64) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn factorial(n: u64) -> u128 {
    (1..=n as u128).product()
}

/// The exact weight `s! (n-s-1)! / n!` as an unreduced integer ratio.
pub fn shapley_weight_ratio(s_size: usize, n: usize) -> Result<(u128, u128), ShapleyError> {
    if n > MAX_EXACT_PLAYERS {
        return Err(ShapleyError::Overflow(n));
    }
    if s_size >= n {
        return Err(ShapleyError::InvalidArgument(format!("coalition size {s_size} must be < {n}")));
    }
    Ok((factorial(s_size as u64) * factorial((n - s_size - 1) as u64), factorial(n as u64)))
}

/// `s! (n-s-1)! / n!`, evaluated as `1 / (n * C(n-1, s))` so the only
/// rounding is the final division.
pub fn shapley_weight(s_size: usize, n: usize) -> Result<f64, ShapleyError> {
    shapley_weight_ratio(s_size, n)?;
    let denom = n as u128 * binomial((n - 1) as u64, s_size as u64);
    Ok(1.0 / denom as f64)
}

/// Coalition values for the full lattice, indexed by bitmask.
#[derive(Debug, Clone, PartialEq)]
pub struct CoalitionTable {
    n: usize,
    values: Vec<f64>,
}

impl CoalitionTable {
    pub fn from_values(n: usize, values: Vec<f64>) -> Result<Self, ShapleyError> {
        if n == 0 || n > MAX_EXACT_PLAYERS {
            return Err(ShapleyError::Overflow(n));
        }
        if values.len() != 1 << n {
            return Err(ShapleyError::InvalidArgument(format!(
                "expected {} coalition values, got {}",
                1usize << n,
                values.len()
            )));
        }
        Ok(Self { n, values })
    }

    /// Evaluates `value_fn` exactly once per coalition, in bitmask order.
    pub fn evaluate<F, E>(n: usize, mut value_fn: F) -> Result<Self, ShapleyError>
    where
        F: FnMut(Coalition) -> Result<f64, E>,
        E: Into<BoxError>,
    {
        if n == 0 || n > MAX_EXACT_PLAYERS {
            return Err(ShapleyError::Overflow(n));
        }
        let values = Coalition::all(n)
            .map(|c| {
                value_fn(c).map_err(|e| ShapleyError::ValueFnFailure {
                    bits: c.bits(),
                    source: e.into(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { n, values })
    }

    pub fn players(&self) -> usize {
        self.n
    }

    pub fn value(&self, c: Coalition) -> f64 {
        self.values[c.bits() as usize]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn grand(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn empty(&self) -> f64 {
        self.values[0]
    }

    /// Exact Shapley values.
    pub fn shapley(&self) -> Vec<f64> {
        let n = self.n;
        let weights: Vec<f64> = (0..n).map(|s| shapley_weight(s, n).unwrap()).collect();
        (0..n)
            .map(|i| {
                let bit = 1usize << i;
                let mut phi = 0.0;
                for s in 0..self.values.len() {
                    if s & bit != 0 {
                        continue;
                    }
                    let size = s.count_ones() as usize;
                    phi += weights[size] * (self.values[s | bit] - self.values[s]);
                }
                phi
            })
            .collect()
    }
}

/// Exact Shapley values of the game `value_fn` over `n` players.
pub fn exact_shapley<F, E>(value_fn: F, n: usize) -> Result<Vec<f64>, ShapleyError>
where
    F: FnMut(Coalition) -> Result<f64, E>,
    E: Into<BoxError>,
{
    Ok(CoalitionTable::evaluate(n, value_fn)?.shapley())
}

#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
    pub permutations: usize,
    /// Distinct coalitions evaluated.
    pub evaluations: usize,
}

/// Permutation-sampling Shapley estimate. Each coalition is evaluated at
/// most once; the standard error comes from the per-permutation marginals.
pub fn mc_shapley<F, E>(mut value_fn: F, n: usize, num_permutations: usize, seed: u64) -> Result<McEstimate, ShapleyError>
where
    F: FnMut(Coalition) -> Result<f64, E>,
    E: Into<BoxError>,
{
    if num_permutations < 2 {
        return Err(ShapleyError::InvalidArgument("at least 2 permutations required".into()));
    }
    if n == 0 || n > 31 {
        return Err(ShapleyError::InvalidArgument(format!("player count {n} outside 1..=31")));
    }
    let mut memo: HashMap<u32, f64> = HashMap::new();
    let mut eval = |c: Coalition| -> Result<f64, ShapleyError> {
        if let Some(v) = memo.get(&c.bits()) {
            return Ok(*v);
        }
        let v = value_fn(c).map_err(|e| ShapleyError::ValueFnFailure {
            bits: c.bits(),
            source: e.into(),
        })?;
        memo.insert(c.bits(), v);
        Ok(v)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut mean = vec![0.0; n];
    let mut m2 = vec![0.0; n];
    let empty = eval(Coalition::empty(n))?;
    for k in 1..=num_permutations {
        order.shuffle(&mut rng);
        let mut coalition = Coalition::empty(n);
        let mut prev = empty;
        for &p in &order {
            coalition = coalition.with(p);
            let v = eval(coalition)?;
            let x = v - prev;
            prev = v;
            // Welford update
            let delta = x - mean[p];
            mean[p] += delta / k as f64;
            m2[p] += delta * (x - mean[p]);
        }
    }
    let m = num_permutations as f64;
    let stderr = m2.iter().map(|s| (s / (m - 1.0) / m).sqrt()).collect();
    Ok(McEstimate {
        values: mean,
        stderr,
        permutations: num_permutations,
        evaluations: memo.len(),
    })
}

/// How channels outside the coalition are replaced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum AblationStrategy {
    #[default]
    ZeroFill,
    ConstantFill { value: f32 },
    ChannelMeanFill,
    NoiseFill { seed: u64, sigma: f32 },
}

impl AblationStrategy {
    /// Stable identifier used to key cached predictions.
    pub fn cache_key(&self) -> String {
        match self {
            AblationStrategy::ZeroFill => "zero".into(),
            AblationStrategy::ConstantFill { value } => format!("const-{:08x}", value.to_bits()),
            AblationStrategy::ChannelMeanFill => "mean".into(),
            AblationStrategy::NoiseFill { seed, sigma } => format!("noise-{seed}-{:08x}", sigma.to_bits()),
        }
    }
}

impl std::str::FromStr for AblationStrategy {
    type Err = String;

    /// Parses `zero`, `mean`, `const:<value>` or `noise:<seed>:<sigma>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || format!("unrecognized ablation strategy {s:?}");
        match parts.as_slice() {
            ["zero"] | ["zero_fill"] => Ok(Self::ZeroFill),
            ["mean"] | ["channel_mean_fill"] => Ok(Self::ChannelMeanFill),
            ["const", v] => Ok(Self::ConstantFill { value: v.parse().map_err(|_| bad())? }),
            ["noise", seed, sigma] => Ok(Self::NoiseFill {
                seed: seed.parse().map_err(|_| bad())?,
                sigma: sigma.parse().map_err(|_| bad())?,
            }),
            _ => Err(bad()),
        }
    }
}

/// Replaces every channel outside `coalition` according to `strategy`.
pub fn ablate(
    volume: &MultiContrastVolume,
    coalition: Coalition,
    strategy: &AblationStrategy,
) -> Result<MultiContrastVolume, ShapleyError> {
    if coalition.players() != volume.channels() {
        return Err(ShapleyError::ChannelCountMismatch {
            coalition: coalition.players(),
            volume: volume.channels(),
        });
    }
    let mut out = volume.clone();
    for c in (0..volume.channels()).filter(|&c| !coalition.contains(c)) {
        let channel = out.channel_mut(c);
        match strategy {
            AblationStrategy::ZeroFill => channel.fill(0.0),
            AblationStrategy::ConstantFill { value } => channel.fill(*value),
            AblationStrategy::ChannelMeanFill => {
                let mean = channel.iter().map(|&v| v as f64).sum::<f64>() / channel.len() as f64;
                channel.fill(mean as f32);
            }
            AblationStrategy::NoiseFill { seed, sigma } => {
                let normal = Normal::new(0.0f32, *sigma)
                    .map_err(|e| ShapleyError::InvalidArgument(format!("noise sigma: {e}")))?;
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                rng.set_stream(c as u64);
                for v in channel.iter_mut() {
                    *v = normal.sample(&mut rng);
                }
            }
        }
    }
    Ok(out)
}

/// On-disk store of coalition predictions: `<root>/<subject_id>/<bitmask>.seg`.
///
/// One root holds predictions of a single model under a single ablation
/// strategy; see [`PredictionCache::for_model`].
#[derive(Debug, Clone)]
pub struct PredictionCache {
    root: PathBuf,
}

impl PredictionCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn for_model(base: impl AsRef<Path>, model_id: &str, strategy: &AblationStrategy) -> Self {
        Self::new(base.as_ref().join(model_id).join(strategy.cache_key()))
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, subject_id: &str, coalition: Coalition) -> PathBuf {
        self.root.join(subject_id).join(format!("{}.seg", coalition.bits()))
    }

    /// Cached prediction, if present and readable. Unreadable entries count
    /// as misses and get overwritten.
    pub fn get(&self, subject_id: &str, coalition: Coalition) -> Option<LabelMap> {
        let path = self.path(subject_id, coalition);
        if !path.exists() {
            return None;
        }
        match volume::read_seg(&path) {
            Ok(m) => Some(m),
            Err(e) => {
                log::warn!("ignoring unreadable cache entry {}: {e}", path.display());
                None
            }
        }
    }

    /// Inserts unless a readable entry already exists.
    pub fn put(&self, subject_id: &str, coalition: Coalition, map: &LabelMap) -> Result<(), ShapleyError> {
        if self.get(subject_id, coalition).is_some() {
            return Ok(());
        }
        volume::write_seg(map, self.path(subject_id, coalition))?;
        Ok(())
    }
}

/// One subject's Shapley values for one metric: a column of the matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectVector {
    pub subject_id: String,
    pub model_id: String,
    pub fold: String,
    pub metric: MetricId,
    pub values: Vec<f64>,
}

/// Shapley values of one (metric, model, fold): rows are channels, columns
/// are subjects. Row `i` is the channel's series across subjects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapleyMatrix {
    pub metric: MetricId,
    pub model_id: String,
    pub fold: String,
    pub contrasts: Vec<String>,
    pub subjects: Vec<String>,
    /// Row-major, `contrasts.len() * subjects.len()`.
    pub values: Vec<f64>,
}

impl ShapleyMatrix {
    pub fn from_vectors(contrasts: Vec<String>, vectors: &[SubjectVector]) -> Result<Self, ShapleyError> {
        let first = vectors
            .first()
            .ok_or_else(|| ShapleyError::InvalidArgument("no subject vectors".into()))?;
        let n = contrasts.len();
        for v in vectors {
            if v.values.len() != n || v.metric != first.metric || v.model_id != first.model_id || v.fold != first.fold {
                return Err(ShapleyError::InvalidArgument(format!(
                    "subject vector {} does not match matrix shape or key",
                    v.subject_id
                )));
            }
        }
        let j = vectors.len();
        let mut values = vec![0.0; n * j];
        for (col, v) in vectors.iter().enumerate() {
            for (row, &x) in v.values.iter().enumerate() {
                values[row * j + col] = x;
            }
        }
        Ok(Self {
            metric: first.metric.clone(),
            model_id: first.model_id.clone(),
            fold: first.fold.clone(),
            contrasts,
            subjects: vectors.iter().map(|v| v.subject_id.clone()).collect(),
            values,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.contrasts.len(), self.subjects.len())
    }

    /// The series of contrast `i` across subjects.
    pub fn row(&self, i: usize) -> &[f64] {
        let j = self.subjects.len();
        &self.values[i * j..(i + 1) * j]
    }

    pub fn column(&self, j: usize) -> SubjectVector {
        let cols = self.subjects.len();
        SubjectVector {
            subject_id: self.subjects[j].clone(),
            model_id: self.model_id.clone(),
            fold: self.fold.clone(),
            metric: self.metric.clone(),
            values: (0..self.contrasts.len()).map(|i| self.values[i * cols + j]).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ShapleyMode {
    #[default]
    Exact,
    MonteCarlo { permutations: usize, seed: u64 },
}

/// Everything needed to explain one subject.
#[derive(Clone, Copy)]
pub struct ExplainRequest<'a> {
    pub subject_id: &'a str,
    pub input: &'a MultiContrastVolume,
    pub gt: &'a LabelMap,
    pub strategy: &'a AblationStrategy,
    pub cfg: &'a MetricConfig,
    pub registry: &'a MetricRegistry,
    pub cache: Option<&'a PredictionCache>,
    pub mode: ShapleyMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricExplanation {
    pub metric: MetricId,
    /// Shapley values of the label-averaged metric.
    pub values: Vec<f64>,
    /// Standard errors in Monte-Carlo mode.
    pub stderr: Option<Vec<f64>>,
    /// Per-label Shapley vectors in label-set order (exact mode only).
    pub per_label: Option<Vec<Vec<f64>>>,
    /// Value of the full coalition: the subject's own metric score.
    pub score: f64,
    /// Value of the empty coalition.
    pub empty_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubjectExplanation {
    pub subject_id: String,
    pub model_id: String,
    pub metrics: Vec<MetricExplanation>,
    /// Distinct coalitions whose predictions were needed.
    pub coalitions_evaluated: usize,
    /// Predictions actually requested from the adapter (cache misses).
    pub adapter_calls: usize,
}

struct CoalitionScorer<'a> {
    req: ExplainRequest<'a>,
    predictor: &'a dyn Predictor,
    metrics: &'a [MetricId],
    adapter_calls: usize,
}

impl CoalitionScorer<'_> {
    fn prediction(&mut self, c: Coalition) -> Result<LabelMap, ShapleyError> {
        if let Some(cache) = self.req.cache {
            if let Some(map) = cache.get(self.req.subject_id, c) {
                return Ok(map);
            }
        }
        let input = ablate(self.req.input, c, self.req.strategy)?;
        self.adapter_calls += 1;
        let map = self
            .predictor
            .predict(self.req.subject_id, &input, c)
            .map_err(|source| ShapleyError::AdapterFailure {
                subject: self.req.subject_id.to_string(),
                bits: c.bits(),
                source,
            })?;
        if let Some(cache) = self.req.cache {
            cache.put(self.req.subject_id, c, &map)?;
        }
        Ok(map)
    }

    /// Per-metric per-label values of one coalition.
    fn score(&mut self, c: Coalition) -> Result<Vec<Vec<f64>>, ShapleyError> {
        let pred = self.prediction(c)?;
        self.metrics
            .iter()
            .map(|m| {
                self.req
                    .registry
                    .per_label(m, &pred, self.req.gt, self.req.cfg)
                    .map_err(|e| match e {
                        MetricError::SubjectSkipped { label } => ShapleyError::SubjectSkipped {
                            subject: self.req.subject_id.to_string(),
                            reason: format!("metric {m}: label {label} has exactly one empty mask (coalition {})", c.bits()),
                        },
                        source => ShapleyError::Metric { bits: c.bits(), source },
                    })
            })
            .collect()
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Explains one subject for several metrics at once. Each coalition is
/// predicted at most once and scored under every metric.
pub fn explain_subject(
    req: ExplainRequest<'_>,
    predictor: &dyn Predictor,
    metrics: &[MetricId],
) -> Result<SubjectExplanation, ShapleyError> {
    let n = req.input.channels();
    if metrics.is_empty() {
        return Err(ShapleyError::InvalidArgument("no metrics requested".into()));
    }
    let mut scorer = CoalitionScorer {
        req,
        predictor,
        metrics,
        adapter_calls: 0,
    };
    let (explanations, coalitions_evaluated) = match req.mode {
        ShapleyMode::Exact => {
            if n > MAX_EXACT_PLAYERS {
                return Err(ShapleyError::Overflow(n));
            }
            let mut lattice = Vec::with_capacity(1 << n);
            for c in Coalition::all(n) {
                lattice.push(scorer.score(c)?);
            }
            let labels = req.gt.label_set().len();
            let explained = metrics
                .iter()
                .enumerate()
                .map(|(mi, metric)| {
                    let averaged: Vec<f64> = lattice.iter().map(|s| mean(&s[mi])).collect();
                    let table = CoalitionTable::from_values(n, averaged)?;
                    let per_label = (0..labels)
                        .map(|l| {
                            CoalitionTable::from_values(n, lattice.iter().map(|s| s[mi][l]).collect())
                                .map(|t| t.shapley())
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    Ok(MetricExplanation {
                        metric: metric.clone(),
                        values: table.shapley(),
                        stderr: None,
                        per_label: Some(per_label),
                        score: table.grand(),
                        empty_value: table.empty(),
                    })
                })
                .collect::<Result<Vec<_>, ShapleyError>>()?;
            (explained, 1 << n)
        }
        ShapleyMode::MonteCarlo { permutations, seed } => {
            let mut memo: HashMap<u32, Vec<f64>> = HashMap::new();
            let mut out = Vec::with_capacity(metrics.len());
            for (mi, metric) in metrics.iter().enumerate() {
                let mut value = |c: Coalition| -> Result<f64, ShapleyError> {
                    if let Some(v) = memo.get(&c.bits()) {
                        return Ok(v[mi]);
                    }
                    let scores: Vec<f64> = scorer.score(c)?.iter().map(|s| mean(s)).collect();
                    let v = scores[mi];
                    memo.insert(c.bits(), scores);
                    Ok(v)
                };
                let est = mc_shapley(&mut value, n, permutations, seed)?;
                let score = value(Coalition::full(n))?;
                let empty_value = value(Coalition::empty(n))?;
                out.push(MetricExplanation {
                    metric: metric.clone(),
                    values: est.values,
                    stderr: Some(est.stderr),
                    per_label: None,
                    score,
                    empty_value,
                });
            }
            (out, memo.len())
        }
    };
    Ok(SubjectExplanation {
        subject_id: req.subject_id.to_string(),
        model_id: predictor.model_id().to_string(),
        metrics: explanations,
        coalitions_evaluated,
        adapter_calls: scorer.adapter_calls,
    })
}

/// Shapley vector of one subject under one metric, computed exactly.
pub fn subject_shapley(
    subject_id: &str,
    predictor: &dyn Predictor,
    input: &MultiContrastVolume,
    gt: &LabelMap,
    metric: &MetricId,
    strategy: &AblationStrategy,
    cfg: &MetricConfig,
) -> Result<SubjectVector, ShapleyError> {
    let registry = MetricRegistry::default();
    let req = ExplainRequest {
        subject_id,
        input,
        gt,
        strategy,
        cfg,
        registry: &registry,
        cache: None,
        mode: ShapleyMode::Exact,
    };
    let mut exp = explain_subject(req, predictor, std::slice::from_ref(metric))?;
    Ok(SubjectVector {
        subject_id: subject_id.to_string(),
        model_id: predictor.model_id().to_string(),
        fold: String::new(),
        metric: metric.clone(),
        values: exp.metrics.remove(0).values,
    })
}
