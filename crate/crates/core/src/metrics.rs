//! Segmentation metrics: Dice overlap and the 95th-percentile Hausdorff
//! distance, plus the label-averaged scalar used as a coalition value.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::volume::{BinaryMask, Dims, LabelMap, Spacing};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("dimension mismatch: {0:?} vs {1:?}")]
    DimMismatch([usize; 3], [usize; 3]),
    #[error("spacing mismatch: {0:?} vs {1:?}")]
    SpacingMismatch([f32; 3], [f32; 3]),
    #[error("mask has no foreground voxels")]
    EmptyMask,
    #[error("label set mismatch: {0:?} vs {1:?}")]
    LabelSetMismatch(Vec<u8>, Vec<u8>),
    #[error("subject skipped: label {label} has exactly one empty mask")]
    SubjectSkipped { label: u8 },
    #[error("unknown metric {0:?}")]
    UnknownMetric(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    HigherBetter,
    LowerBetter,
}

/// Identifies a segmentation metric. Built-ins are Dice and HD95; other
/// names resolve through a [`MetricRegistry`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MetricId {
    Dice,
    Hd95,
    Custom(String),
}

impl MetricId {
    pub fn name(&self) -> &str {
        match self {
            MetricId::Dice => "dice",
            MetricId::Hd95 => "hd95",
            MetricId::Custom(s) => s,
        }
    }

    /// Orientation of the built-ins; custom metrics report theirs via the registry.
    pub fn orientation(&self) -> Option<Orientation> {
        match self {
            MetricId::Dice => Some(Orientation::HigherBetter),
            MetricId::Hd95 => Some(Orientation::LowerBetter),
            MetricId::Custom(_) => None,
        }
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricId {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "dice" => MetricId::Dice,
            "hd95" => MetricId::Hd95,
            _ => MetricId::Custom(s.to_string()),
        })
    }
}

impl Serialize for MetricId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for MetricId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(s.parse().unwrap())
    }
}

/// What HD95 does when exactly one of the two masks is empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmptyPolicy {
    /// Report a fixed distance; `None` means the volume diagonal in mm.
    Penalty(Option<f64>),
    SkipSubject,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricConfig {
    pub empty_pair_dice: f64,
    pub hd95_empty_policy: EmptyPolicy,
    /// Percentile over the pooled set of both directed distances instead of
    /// the max of the two directed percentiles.
    pub hd95_pooled: bool,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            empty_pair_dice: 1.0,
            hd95_empty_policy: EmptyPolicy::Penalty(None),
            hd95_pooled: false,
        }
    }
}

pub const HD_PERCENTILE: f64 = 95.0;

fn check_geometry(a: &BinaryMask, b: &BinaryMask) -> Result<(), MetricError> {
    if a.dims() != b.dims() {
        return Err(MetricError::DimMismatch(a.dims().as_array(), b.dims().as_array()));
    }
    if a.spacing() != b.spacing() {
        return Err(MetricError::SpacingMismatch(a.spacing().0, b.spacing().0));
    }
    Ok(())
}

/// Dice overlap `2|P∩G| / (|P|+|G|)`.
pub fn dice(pred: &BinaryMask, gt: &BinaryMask, cfg: &MetricConfig) -> Result<f64, MetricError> {
    if pred.dims() != gt.dims() {
        return Err(MetricError::DimMismatch(pred.dims().as_array(), gt.dims().as_array()));
    }
    let (mut inter, mut np, mut ng) = (0usize, 0usize, 0usize);
    for (&p, &g) in pred.bits().iter().zip(gt.bits()) {
        np += p as usize;
        ng += g as usize;
        inter += (p && g) as usize;
    }
    if np + ng == 0 {
        return Ok(cfg.empty_pair_dice);
    }
    Ok(2.0 * inter as f64 / (np + ng) as f64)
}

/// Exact squared Euclidean distance (mm²) from every voxel to the nearest
/// foreground voxel.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    pub dims: Dims,
    pub values: Vec<f64>,
}

/// Separable exact squared EDT: one lower-envelope-of-parabolas pass per
/// axis, with the axis spacing folded into the parabola width.
pub fn squared_edt(mask: &BinaryMask) -> Result<DistanceField, MetricError> {
    if mask.is_empty() {
        return Err(MetricError::EmptyMask);
    }
    let dims = mask.dims();
    let [sd, sh, sw] = mask.spacing().as_f64();
    let mut field: Vec<f64> = mask
        .bits()
        .iter()
        .map(|&b| if b { 0.0 } else { f64::INFINITY })
        .collect();

    let (d, h, w) = (dims.d, dims.h, dims.w);
    let longest = d.max(h).max(w);
    let mut scratch = EnvelopeScratch::new(longest);

    // width axis: contiguous lines
    for line in field.chunks_exact_mut(w) {
        scratch.transform(line, w, 1, sw * sw);
    }
    // height axis
    for z in 0..d {
        let base = z * h * w;
        for x in 0..w {
            scratch.transform(&mut field[base + x..], h, w, sh * sh);
        }
    }
    // depth axis
    for y in 0..h {
        for x in 0..w {
            scratch.transform(&mut field[y * w + x..], d, h * w, sd * sd);
        }
    }
    Ok(DistanceField { dims, values: field })
}

struct EnvelopeScratch {
    f: Vec<f64>,
    sites: Vec<usize>,
    bounds: Vec<f64>,
}

impl EnvelopeScratch {
    fn new(n: usize) -> Self {
        Self {
            f: Vec::with_capacity(n),
            sites: Vec::with_capacity(n),
            bounds: Vec::with_capacity(n + 1),
        }
    }

    /// In-place 1-D transform of the `n`-voxel strided line starting at `data[0]`:
    /// `out(q) = min_p f(p) + w2 (q - p)²` over sites with finite `f(p)`.
    fn transform(&mut self, data: &mut [f64], n: usize, stride: usize, w2: f64) {
        self.f.clear();
        self.f.extend((0..n).map(|i| data[i * stride]));
        self.sites.clear();
        self.bounds.clear();

        let f = &self.f;
        let key = |p: usize| f[p] + w2 * (p * p) as f64;
        for q in 0..n {
            if !f[q].is_finite() {
                continue;
            }
            loop {
                let Some(&p) = self.sites.last() else {
                    self.sites.push(q);
                    self.bounds.push(f64::NEG_INFINITY);
                    break;
                };
                let s = (key(q) - key(p)) / (2.0 * w2 * (q - p) as f64);
                if s <= *self.bounds.last().unwrap() {
                    self.sites.pop();
                    self.bounds.pop();
                } else {
                    self.sites.push(q);
                    self.bounds.push(s);
                    break;
                }
            }
        }
        if self.sites.is_empty() {
            return;
        }
        let mut k = 0;
        for q in 0..n {
            while k + 1 < self.sites.len() && self.bounds[k + 1] < q as f64 {
                k += 1;
            }
            let p = self.sites[k];
            let dq = q.abs_diff(p) as f64;
            data[q * stride] = f[p] + w2 * dq * dq;
        }
    }
}

/// Boundary voxels: foreground with at least one background 6-neighbor, or
/// touching the domain edge.
pub fn surface(mask: &BinaryMask) -> BinaryMask {
    let dims = mask.dims();
    let bits = mask.bits();
    let (d, h, w) = (dims.d, dims.h, dims.w);
    let mut out = vec![false; bits.len()];
    for z in 0..d {
        for y in 0..h {
            for x in 0..w {
                let i = dims.index(z, y, x);
                if !bits[i] {
                    continue;
                }
                let edge = z == 0 || y == 0 || x == 0 || z + 1 == d || y + 1 == h || x + 1 == w;
                out[i] = edge
                    || !bits[i - h * w]
                    || !bits[i + h * w]
                    || !bits[i - w]
                    || !bits[i + w]
                    || !bits[i - 1]
                    || !bits[i + 1];
            }
        }
    }
    BinaryMask::new(dims, mask.spacing(), out).expect("same geometry as input")
}

/// Linear-interpolation percentile of an unsorted sample (`p` in [0, 100]).
pub fn percentile(values: &mut [f64], p: f64) -> f64 {
    assert!(!values.is_empty(), "percentile of empty sample");
    values.sort_by(f64::total_cmp);
    let pos = p / 100.0 * (values.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    values[lo] + frac * (values[hi] - values[lo])
}

/// Diagonal of the volume extent in mm.
pub fn volume_diagonal(dims: Dims, spacing: Spacing) -> f64 {
    let s = spacing.as_f64();
    dims.as_array()
        .iter()
        .zip(s)
        .map(|(&n, s)| (n as f64 * s).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Distances from each surface voxel of `from` to the nearest surface voxel of `to`.
fn directed_surface_distances(from: &BinaryMask, to: &BinaryMask) -> Vec<f64> {
    let field = squared_edt(to).expect("surface of a nonempty mask is nonempty");
    from.bits()
        .iter()
        .zip(&field.values)
        .filter(|(b, _)| **b)
        .map(|(_, d2)| d2.sqrt())
        .collect()
}

enum EmptyCase {
    Both,
    One,
    Neither,
}

fn empty_case(a: &BinaryMask, b: &BinaryMask) -> EmptyCase {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => EmptyCase::Both,
        (false, false) => EmptyCase::Neither,
        _ => EmptyCase::One,
    }
}

fn one_empty_value(mask: &BinaryMask, cfg: &MetricConfig) -> Option<f64> {
    match cfg.hd95_empty_policy {
        EmptyPolicy::Penalty(Some(v)) => Some(v),
        EmptyPolicy::Penalty(None) => Some(volume_diagonal(mask.dims(), mask.spacing())),
        EmptyPolicy::SkipSubject => None,
    }
}

fn surface_percentile_distance(
    pred: &BinaryMask,
    gt: &BinaryMask,
    pct: f64,
    pooled: bool,
) -> f64 {
    let sp = surface(pred);
    let sg = surface(gt);
    let mut a = directed_surface_distances(&sp, &sg);
    let mut b = directed_surface_distances(&sg, &sp);
    if pooled {
        a.append(&mut b);
        percentile(&mut a, pct)
    } else {
        percentile(&mut a, pct).max(percentile(&mut b, pct))
    }
}

/// 95th-percentile symmetric surface distance in mm.
///
/// Returns `Ok(None)` when exactly one mask is empty and the configured
/// policy is to skip the subject.
pub fn hd95_opt(pred: &BinaryMask, gt: &BinaryMask, cfg: &MetricConfig) -> Result<Option<f64>, MetricError> {
    check_geometry(pred, gt)?;
    match empty_case(pred, gt) {
        EmptyCase::Both => Ok(Some(0.0)),
        EmptyCase::One => Ok(one_empty_value(pred, cfg)),
        EmptyCase::Neither => Ok(Some(surface_percentile_distance(pred, gt, HD_PERCENTILE, cfg.hd95_pooled))),
    }
}

/// 95th-percentile symmetric surface distance in mm. The skip policy for a
/// single empty mask surfaces as [`MetricError::SubjectSkipped`] with label 0.
pub fn hd95(pred: &BinaryMask, gt: &BinaryMask, cfg: &MetricConfig) -> Result<f64, MetricError> {
    hd95_opt(pred, gt, cfg)?.ok_or(MetricError::SubjectSkipped { label: 0 })
}

/// Exact (100th percentile) symmetric surface Hausdorff distance.
pub fn hausdorff(pred: &BinaryMask, gt: &BinaryMask, cfg: &MetricConfig) -> Result<f64, MetricError> {
    check_geometry(pred, gt)?;
    match empty_case(pred, gt) {
        EmptyCase::Both => Ok(0.0),
        EmptyCase::One => one_empty_value(pred, cfg).ok_or(MetricError::SubjectSkipped { label: 0 }),
        EmptyCase::Neither => Ok(surface_percentile_distance(pred, gt, 100.0, cfg.hd95_pooled)),
    }
}

/// A metric over one pair of binary masks.
pub trait MaskMetric: Send + Sync {
    fn orientation(&self) -> Orientation;
    fn evaluate(&self, pred: &BinaryMask, gt: &BinaryMask, cfg: &MetricConfig) -> Result<f64, MetricError>;
}

struct DiceMetric;

impl MaskMetric for DiceMetric {
    fn orientation(&self) -> Orientation {
        Orientation::HigherBetter
    }

    fn evaluate(&self, pred: &BinaryMask, gt: &BinaryMask, cfg: &MetricConfig) -> Result<f64, MetricError> {
        dice(pred, gt, cfg)
    }
}

struct Hd95Metric;

impl MaskMetric for Hd95Metric {
    fn orientation(&self) -> Orientation {
        Orientation::LowerBetter
    }

    fn evaluate(&self, pred: &BinaryMask, gt: &BinaryMask, cfg: &MetricConfig) -> Result<f64, MetricError> {
        hd95(pred, gt, cfg)
    }
}

/// Name → metric lookup. Starts with the built-ins; extensions register
/// under new names.
#[derive(Clone)]
pub struct MetricRegistry {
    metrics: BTreeMap<String, Arc<dyn MaskMetric>>,
}

impl Default for MetricRegistry {
    fn default() -> Self {
        let mut metrics: BTreeMap<String, Arc<dyn MaskMetric>> = BTreeMap::new();
        metrics.insert("dice".into(), Arc::new(DiceMetric));
        metrics.insert("hd95".into(), Arc::new(Hd95Metric));
        Self { metrics }
    }
}

impl fmt::Debug for MetricRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.metrics.keys()).finish()
    }
}

impl MetricRegistry {
    pub fn register(&mut self, name: impl Into<String>, metric: Arc<dyn MaskMetric>) {
        self.metrics.insert(name.into(), metric);
    }

    pub fn get(&self, id: &MetricId) -> Result<&Arc<dyn MaskMetric>, MetricError> {
        self.metrics
            .get(id.name())
            .ok_or_else(|| MetricError::UnknownMetric(id.name().to_string()))
    }

    pub fn contains(&self, id: &MetricId) -> bool {
        self.metrics.contains_key(id.name())
    }

    /// Metric value for every declared label, in label-set order.
    pub fn per_label(&self, metric: &MetricId, pred: &LabelMap, gt: &LabelMap, cfg: &MetricConfig) -> Result<Vec<f64>, MetricError> {
        let m = self.get(metric)?;
        if pred.label_set() != gt.label_set() {
            return Err(MetricError::LabelSetMismatch(pred.label_set().to_vec(), gt.label_set().to_vec()));
        }
        if pred.dims() != gt.dims() {
            return Err(MetricError::DimMismatch(pred.dims().as_array(), gt.dims().as_array()));
        }
        if pred.spacing() != gt.spacing() {
            return Err(MetricError::SpacingMismatch(pred.spacing().0, gt.spacing().0));
        }
        gt.label_set()
            .iter()
            .map(|&label| {
                let p = pred.one_hot(label).expect("label declared");
                let g = gt.one_hot(label).expect("label declared");
                m.evaluate(&p, &g, cfg).map_err(|e| match e {
                    MetricError::SubjectSkipped { .. } => MetricError::SubjectSkipped { label },
                    other => other,
                })
            })
            .collect()
    }

    pub fn label_averaged(&self, metric: &MetricId, pred: &LabelMap, gt: &LabelMap, cfg: &MetricConfig) -> Result<f64, MetricError> {
        let values = self.per_label(metric, pred, gt, cfg)?;
        if values.is_empty() {
            return Err(MetricError::LabelSetMismatch(vec![], vec![]));
        }
        Ok(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// Arithmetic mean of a built-in metric over the declared label set.
pub fn label_averaged_metric(metric: &MetricId, pred: &LabelMap, gt: &LabelMap, cfg: &MetricConfig) -> Result<f64, MetricError> {
    MetricRegistry::default().label_averaged(metric, pred, gt, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::Dims;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mask(dims: Dims, idx: &[usize]) -> BinaryMask {
        BinaryMask::from_indices(dims, Spacing::UNIT, idx).unwrap()
    }

    fn random_mask(rng: &mut ChaCha8Rng, dims: Dims, spacing: Spacing, density: f64) -> BinaryMask {
        let bits = (0..dims.len()).map(|_| rng.random_bool(density)).collect();
        BinaryMask::new(dims, spacing, bits).unwrap()
    }

    fn brute_edt(m: &BinaryMask) -> Vec<f64> {
        let dims = m.dims();
        let s = m.spacing().as_f64();
        let fg: Vec<[usize; 3]> = (0..dims.len()).filter(|&i| m.bits()[i]).map(|i| dims.coords(i)).collect();
        (0..dims.len())
            .map(|i| {
                let c = dims.coords(i);
                fg.iter()
                    .map(|u| (0..3).map(|a| ((c[a] as f64 - u[a] as f64) * s[a]).powi(2)).sum::<f64>())
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    #[test]
    fn dice_examples() {
        let cfg = MetricConfig::default();
        let dims = Dims::new(1, 4, 4);
        let p = mask(dims, &[0, 1, 2, 3]);
        assert_eq!(dice(&p, &p, &cfg).unwrap(), 1.0);
        let q = mask(dims, &[8, 9, 10, 11]);
        assert_eq!(dice(&p, &q, &cfg).unwrap(), 0.0);
        let r = mask(dims, &[2, 3, 4, 5]);
        assert_eq!(dice(&p, &r, &cfg).unwrap(), 0.5);
        let e = mask(dims, &[]);
        assert_eq!(dice(&e, &e, &cfg).unwrap(), 1.0);
        let other = mask(Dims::new(1, 1, 16), &[]);
        assert!(matches!(dice(&p, &other, &cfg), Err(MetricError::DimMismatch(..))));
    }

    #[test]
    fn edt_examples() {
        let dims = Dims::new(1, 1, 4);
        let m = mask(dims, &[0]);
        assert_eq!(squared_edt(&m).unwrap().values[3], 9.0);
        let m = BinaryMask::from_indices(Dims::new(1, 1, 3), Spacing([1.0, 1.0, 2.0]), &[0]).unwrap();
        assert_eq!(squared_edt(&m).unwrap().values[1], 4.0);
        assert_eq!(squared_edt(&mask(dims, &[])), Err(MetricError::EmptyMask));
    }

    #[test]
    fn edt_matches_brute_force_on_random_masks() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..20 {
            let dims = Dims::new(rng.random_range(1..13), rng.random_range(1..13), rng.random_range(1..13));
            let spacing = if trial % 2 == 0 { Spacing::UNIT } else { Spacing([1.0, 1.5, 2.0]) };
            let m = random_mask(&mut rng, dims, spacing, 0.05);
            if m.is_empty() {
                continue;
            }
            let fast = squared_edt(&m).unwrap().values;
            let slow = brute_edt(&m);
            for (a, b) in fast.iter().zip(&slow) {
                if spacing == Spacing::UNIT {
                    assert_eq!(a, b);
                } else {
                    assert!((a - b).abs() < 1e-9, "{a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn surface_examples() {
        let dims = Dims::new(5, 5, 5);
        let mut idx = vec![];
        for z in 1..4 {
            for y in 1..4 {
                for x in 1..4 {
                    idx.push(dims.index(z, y, x));
                }
            }
        }
        let cube = mask(dims, &idx);
        let s = surface(&cube);
        assert_eq!(s.count(), 26);
        assert!(!s.get(2, 2, 2));
        let lone = mask(dims, &[dims.index(2, 2, 2)]);
        assert_eq!(surface(&lone), lone);
    }

    #[test]
    fn surface_is_subset_and_peels_boundary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let dims = Dims::new(6, 7, 8);
            let m = random_mask(&mut rng, dims, Spacing::UNIT, 0.7);
            let s = surface(&m);
            for i in 0..dims.len() {
                assert!(!s.bits()[i] || m.bits()[i]);
                if m.bits()[i] && !s.bits()[i] {
                    // interior: every 6-neighbor in bounds and foreground
                    let [z, y, x] = dims.coords(i);
                    assert!(z > 0 && y > 0 && x > 0 && z + 1 < dims.d && y + 1 < dims.h && x + 1 < dims.w);
                    for j in [i - 1, i + 1, i - dims.w, i + dims.w, i - dims.w * dims.h, i + dims.w * dims.h] {
                        assert!(m.bits()[j]);
                    }
                }
            }
        }
    }

    #[test]
    fn hd95_examples() {
        let cfg = MetricConfig::default();
        let dims = Dims::new(1, 1, 8);
        let a = mask(dims, &[1]);
        let b = mask(dims, &[6]);
        assert_eq!(hd95(&a, &b, &cfg).unwrap(), 5.0);
        assert_eq!(hd95(&a, &a, &cfg).unwrap(), 0.0);
        let e = mask(dims, &[]);
        assert_eq!(hd95(&e, &e, &cfg).unwrap(), 0.0);
        assert_eq!(hd95(&a, &e, &cfg).unwrap(), 66f64.sqrt());
        let fixed = MetricConfig { hd95_empty_policy: EmptyPolicy::Penalty(Some(42.0)), ..cfg.clone() };
        assert_eq!(hd95(&e, &a, &fixed).unwrap(), 42.0);
        let skip = MetricConfig { hd95_empty_policy: EmptyPolicy::SkipSubject, ..cfg };
        assert!(matches!(hd95(&e, &a, &skip), Err(MetricError::SubjectSkipped { .. })));
    }

    #[test]
    fn hd95_symmetry_scaling_and_bound() {
        let cfg = MetricConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..15 {
            let dims = Dims::new(8, 8, 8);
            let a = random_mask(&mut rng, dims, Spacing::UNIT, 0.1);
            let b = random_mask(&mut rng, dims, Spacing::UNIT, 0.1);
            let ab = hd95(&a, &b, &cfg).unwrap();
            assert_eq!(ab, hd95(&b, &a, &cfg).unwrap());
            assert!(ab <= hausdorff(&a, &b, &cfg).unwrap());
            let s = Spacing([2.5, 2.5, 2.5]);
            let scaled = hd95(&a.with_spacing(s).unwrap(), &b.with_spacing(s).unwrap(), &cfg).unwrap();
            assert!((scaled - 2.5 * ab).abs() < 1e-9);
        }
    }

    #[test]
    fn label_averaging() {
        let cfg = MetricConfig::default();
        let dims = Dims::new(1, 1, 6);
        let gt = LabelMap::new(dims, Spacing::UNIT, vec![1, 2, 3], vec![1, 1, 2, 2, 3, 3]).unwrap();
        assert_eq!(label_averaged_metric(&MetricId::Dice, &gt, &gt, &cfg).unwrap(), 1.0);
        let pred = LabelMap::new(dims, Spacing::UNIT, vec![1, 2, 3], vec![1, 0, 2, 2, 0, 0]).unwrap();
        let per = MetricRegistry::default().per_label(&MetricId::Dice, &pred, &gt, &cfg).unwrap();
        assert_eq!(per, vec![2.0 / 3.0, 1.0, 0.0]);
        let avg = label_averaged_metric(&MetricId::Dice, &pred, &gt, &cfg).unwrap();
        assert!((avg - (2.0 / 3.0 + 1.0) / 3.0).abs() < 1e-15);
        let other = LabelMap::new(dims, Spacing::UNIT, vec![1, 2], vec![0; 6]).unwrap();
        assert!(matches!(label_averaged_metric(&MetricId::Dice, &other, &gt, &cfg), Err(MetricError::LabelSetMismatch(..))));
        assert!(matches!(
            label_averaged_metric(&MetricId::Custom("surface_dice".into()), &gt, &gt, &cfg),
            Err(MetricError::UnknownMetric(_))
        ));
        let skip = MetricConfig { hd95_empty_policy: EmptyPolicy::SkipSubject, ..cfg };
        assert_eq!(
            label_averaged_metric(&MetricId::Hd95, &pred, &gt, &skip),
            Err(MetricError::SubjectSkipped { label: 3 })
        );
    }

    #[test]
    fn custom_metric_registration() {
        struct Volume;
        impl MaskMetric for Volume {
            fn orientation(&self) -> Orientation {
                Orientation::HigherBetter
            }
            fn evaluate(&self, pred: &BinaryMask, _gt: &BinaryMask, _cfg: &MetricConfig) -> Result<f64, MetricError> {
                Ok(pred.count() as f64)
            }
        }
        let mut reg = MetricRegistry::default();
        reg.register("volume", Arc::new(Volume));
        let dims = Dims::new(1, 1, 4);
        let m = LabelMap::new(dims, Spacing::UNIT, vec![1, 2], vec![1, 1, 2, 0]).unwrap();
        let id: MetricId = "volume".parse().unwrap();
        assert_eq!(reg.label_averaged(&id, &m, &m, &MetricConfig::default()).unwrap(), 1.5);
    }

    #[test]
    fn metric_id_serde() {
        let ids: Vec<MetricId> = serde_json::from_str(r#"["dice","HD95","lwd"]"#).unwrap();
        assert_eq!(ids, vec![MetricId::Dice, MetricId::Hd95, MetricId::Custom("lwd".into())]);
        assert_eq!(serde_json::to_string(&ids[1]).unwrap(), "\"hd95\"");
        assert_eq!(MetricId::Hd95.orientation(), Some(Orientation::LowerBetter));
    }
}
