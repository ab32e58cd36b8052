//! Seeded synthetic studies for the union-reveal model family.
//!
//! Every subject gets one disjoint region `R_i` per channel with label
//! `region_labels[i]`; channel `i` carries the region's label value inside
//! `R_i` and faint texture (< 0.5) elsewhere. The ground truth is the union
//! of all regions plus hidden voxels `H_i` that no channel reveals, so a
//! union-reveal prediction on the full coalition scores below 1 whenever
//! hidden voxels exist. Hidden mass drives the two knobs used to test the
//! downstream stages: a low-quality subpopulation and per-(fold, channel)
//! shifts.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adapter::{AdapterSpec, Backend, SyntheticModelKind};
use crate::metrics::MetricId;
use crate::pipeline::{ClusterSettings, FoldDef, LabelDef, Manifest, PipelineError, ShapleySettings, SubjectEntry};
use crate::shapley::Coalition;
use crate::stats::BatteryConfig;
use crate::volume::{write_mcv, write_seg, Dims, LabelMap, MultiContrastVolume, Spacing};

/// A low-quality subpopulation: a fraction of subjects whose ground truth
/// hides `hidden_ratio` times each region's size (jittered by ±25%).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualitySplit {
    pub low_fraction: f64,
    pub hidden_ratio: f64,
}

/// Extra hidden mass for one channel's label in one fold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldShift {
    pub fold: usize,
    pub channel: usize,
    pub hidden_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub name: String,
    pub channels: Vec<String>,
    pub labels: Vec<LabelDef>,
    /// Label revealed by each channel.
    pub region_labels: Vec<u8>,
    /// Base region size per channel, in voxels.
    pub region_sizes: Vec<usize>,
    /// Uniform per-subject size jitter, in voxels.
    pub jitter: usize,
    /// Largest hidden fraction of each region for ordinary subjects.
    pub base_hidden: f64,
    pub dims: [usize; 3],
    pub spacing: [f32; 3],
    pub folds: usize,
    pub subjects_per_fold: usize,
    pub quality: Option<QualitySplit>,
    pub shifts: Vec<FoldShift>,
    /// Reuse the same subject-level draws in every fold, so that injected
    /// shifts are the only difference between folds.
    pub shared_draws: bool,
    pub models: Vec<AdapterSpec>,
    pub metrics: Vec<MetricId>,
    pub seed: u64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            name: "synthetic".into(),
            channels: ["t1n", "t1c", "t2w", "t2f"].map(String::from).to_vec(),
            labels: vec![LabelDef { id: 1, name: "tumor".into() }],
            region_labels: vec![1; 4],
            region_sizes: vec![10, 20, 30, 40],
            jitter: 0,
            base_hidden: 0.0,
            dims: [12, 12, 12],
            spacing: [1.0, 1.0, 1.0],
            folds: 2,
            subjects_per_fold: 3,
            quality: None,
            shifts: vec![],
            shared_draws: false,
            models: vec![union_model("union")],
            metrics: vec![MetricId::Dice],
            seed: 0,
        }
    }
}

/// A synthetic model spec with the given id.
pub fn synthetic_model(model_id: &str, kind: SyntheticModelKind, seed: u64) -> AdapterSpec {
    AdapterSpec {
        model_id: model_id.to_string(),
        backend: Backend::Synthetic { model: kind, seed },
        timeout_s: 300.0,
    }
}

pub fn union_model(model_id: &str) -> AdapterSpec {
    synthetic_model(model_id, SyntheticModelKind::UnionReveal, 0)
}

/// What was generated for one subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectTruth {
    pub fold: String,
    pub subject_id: String,
    pub region_sizes: Vec<usize>,
    pub hidden_sizes: Vec<usize>,
    pub region_labels: Vec<u8>,
    pub low_quality: bool,
    pub shifted_channels: Vec<usize>,
}

impl SubjectTruth {
    /// Closed-form label-averaged Dice of a union-reveal prediction that
    /// includes the regions of `coalition`, skipping `ignored` channels.
    pub fn union_dice(&self, coalition: Coalition, label_set: &[u8], ignored: &[usize], empty_pair: f64) -> f64 {
        let per_label: Vec<f64> = label_set
            .iter()
            .map(|&l| {
                let mut pred = 0usize;
                let mut gt = 0usize;
                for (i, &rl) in self.region_labels.iter().enumerate() {
                    if rl != l {
                        continue;
                    }
                    gt += self.region_sizes[i] + self.hidden_sizes[i];
                    if coalition.contains(i) && !ignored.contains(&i) {
                        pred += self.region_sizes[i];
                    }
                }
                if pred + gt == 0 {
                    empty_pair
                } else {
                    2.0 * pred as f64 / (pred + gt) as f64
                }
            })
            .collect();
        per_label.iter().sum::<f64>() / per_label.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyTruth {
    pub config: StudyConfig,
    pub subjects: Vec<SubjectTruth>,
}

impl StudyTruth {
    pub fn subject(&self, fold: &str, subject_id: &str) -> Option<&SubjectTruth> {
        self.subjects.iter().find(|s| s.fold == fold && s.subject_id == subject_id)
    }

    pub fn label_set(&self) -> Vec<u8> {
        let mut ids: Vec<u8> = self.config.labels.iter().map(|l| l.id).collect();
        ids.sort_unstable();
        ids
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedStudy {
    pub dir: PathBuf,
    pub manifest_path: PathBuf,
    pub manifest: Manifest,
    pub truth: StudyTruth,
}

pub fn fold_id(f: usize) -> String {
    format!("fold{}", f + 1)
}

pub fn subject_id(f: usize, j: usize) -> String {
    format!("f{}-s{:03}", f + 1, j + 1)
}

fn check_config(cfg: &StudyConfig) -> Result<(), PipelineError> {
    let n = cfg.channels.len();
    let bad = |m: String| Err(PipelineError::Config(m));
    if cfg.region_labels.len() != n || cfg.region_sizes.len() != n {
        return bad(format!("need one region label and size per channel ({n})"));
    }
    if cfg.folds == 0 || cfg.subjects_per_fold == 0 {
        return bad("need at least one fold and one subject".into());
    }
    let label_ids: Vec<u8> = cfg.labels.iter().map(|l| l.id).collect();
    if let Some(l) = cfg.region_labels.iter().find(|l| !label_ids.contains(l)) {
        return bad(format!("region label {l} is not declared"));
    }
    for s in &cfg.shifts {
        if s.fold >= cfg.folds || s.channel >= n {
            return bad(format!("shift {s:?} outside the study"));
        }
    }
    if cfg.region_sizes.iter().any(|&r| r <= cfg.jitter) {
        return bad("jitter must stay below every region size".into());
    }
    Ok(())
}

/// Draws region and hidden sizes for one subject.
fn draw_subject(cfg: &StudyConfig, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<f64>, bool) {
    let sizes: Vec<usize> = cfg
        .region_sizes
        .iter()
        .map(|&r| {
            let j = cfg.jitter as i64;
            (r as i64 + rng.random_range(-j..=j)) as usize
        })
        .collect();
    let low = cfg.quality.is_some_and(|q| rng.random::<f64>() < q.low_fraction);
    let ratios: Vec<f64> = (0..sizes.len())
        .map(|_| match (low, cfg.quality) {
            (true, Some(q)) => q.hidden_ratio * rng.random_range(0.75..=1.25),
            _ => cfg.base_hidden * rng.random::<f64>(),
        })
        .collect();
    (sizes, ratios, low)
}

/// Writes a study under `dir`: volumes in `subjects/`, `manifest.json` and
/// `truth.json`.
pub fn generate_study(cfg: &StudyConfig, dir: impl AsRef<Path>) -> Result<GeneratedStudy, PipelineError> {
    check_config(cfg)?;
    let dir = dir.as_ref().to_path_buf();
    let dims = Dims::new(cfg.dims[0], cfg.dims[1], cfg.dims[2]);
    let spacing = Spacing(cfg.spacing);
    let n = cfg.channels.len();
    let mut label_set: Vec<u8> = cfg.labels.iter().map(|l| l.id).collect();
    label_set.sort_unstable();

    let mut subjects = Vec::new();
    let mut folds = Vec::new();
    for f in 0..cfg.folds {
        let mut entries = Vec::new();
        for j in 0..cfg.subjects_per_fold {
            let draw_seed = if cfg.shared_draws { j as u64 } else { (f * cfg.subjects_per_fold + j) as u64 };
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(draw_seed);
            let (sizes, mut ratios, low) = draw_subject(cfg, &mut rng);
            let mut shifted = Vec::new();
            for s in cfg.shifts.iter().filter(|s| s.fold == f) {
                ratios[s.channel] += s.hidden_ratio;
                shifted.push(s.channel);
            }
            let hidden: Vec<usize> = sizes.iter().zip(&ratios).map(|(&r, &q)| (r as f64 * q).round() as usize).collect();
            let needed: usize = sizes.iter().sum::<usize>() + hidden.iter().sum::<usize>();
            if needed > dims.len() {
                return Err(PipelineError::Config(format!(
                    "subject needs {needed} voxels but the volume holds {}",
                    dims.len()
                )));
            }

            let mut order: Vec<usize> = (0..dims.len()).collect();
            order.shuffle(&mut rng);
            let mut data = vec![0.0f32; n * dims.len()];
            for v in data.iter_mut() {
                *v = rng.random_range(0.0..0.45);
            }
            let mut gt = vec![0u8; dims.len()];
            let mut cursor = 0;
            for c in 0..n {
                let label = cfg.region_labels[c];
                for &vox in &order[cursor..cursor + sizes[c]] {
                    data[c * dims.len() + vox] = f32::from(label);
                    gt[vox] = label;
                }
                cursor += sizes[c];
                for &vox in &order[cursor..cursor + hidden[c]] {
                    gt[vox] = label;
                }
                cursor += hidden[c];
            }
            let sid = subject_id(f, j);
            let rel = PathBuf::from("subjects").join(fold_id(f)).join(&sid);
            let volume = MultiContrastVolume::new(cfg.channels.clone(), dims, spacing, data)?;
            let map = LabelMap::new(dims, spacing, label_set.clone(), gt)?;
            write_mcv(&volume, dir.join(&rel).join("input.mcv"))?;
            write_seg(&map, dir.join(&rel).join("gt.seg"))?;
            entries.push(SubjectEntry {
                subject_id: sid.clone(),
                input: rel.join("input.mcv"),
                gt: rel.join("gt.seg"),
            });
            subjects.push(SubjectTruth {
                fold: fold_id(f),
                subject_id: sid,
                region_sizes: sizes,
                hidden_sizes: hidden,
                region_labels: cfg.region_labels.clone(),
                low_quality: low,
                shifted_channels: shifted,
            });
        }
        folds.push(FoldDef {
            fold_id: fold_id(f),
            subjects: entries,
        });
    }

    let manifest = Manifest {
        study_name: cfg.name.clone(),
        channels: cfg.channels.clone(),
        labels: cfg.labels.clone(),
        folds,
        models: cfg.models.clone(),
        metrics: cfg.metrics.clone(),
        metric_config: Default::default(),
        shapley: ShapleySettings::default(),
        stats: BatteryConfig::default(),
        cluster: ClusterSettings::default(),
        reorder_channels: false,
    };
    let truth = StudyTruth {
        config: cfg.clone(),
        subjects,
    };
    let manifest_path = dir.join("manifest.json");
    write_pretty(&manifest_path, &manifest)?;
    write_pretty(&dir.join("truth.json"), &truth)?;
    Ok(GeneratedStudy {
        dir,
        manifest_path,
        manifest,
        truth,
    })
}

fn write_pretty<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| PipelineError::Config(e.to_string()))?;
    bytes.push(b'\n');
    crate::volume::write_atomic(path, &bytes).map_err(PipelineError::from)
}

/// Reads `truth.json` written next to a generated manifest.
pub fn read_truth(dir: impl AsRef<Path>) -> Result<StudyTruth, PipelineError> {
    let path = dir.as_ref().join("truth.json");
    let text = std::fs::read_to_string(&path).map_err(|e| PipelineError::Io { path: path.clone(), source: e })?;
    serde_json::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))
}

/// Brute-force Shapley values over all orderings of the players, for
/// cross-checking the lattice formula.
pub fn permutation_shapley(n: usize, mut value: impl FnMut(Coalition) -> f64) -> Vec<f64> {
    let mut phi = vec![0.0; n];
    let mut perm: Vec<usize> = (0..n).collect();
    let mut count = 0usize;
    // Heap's algorithm
    let mut c = vec![0usize; n];
    let mut visit = |perm: &[usize], phi: &mut [f64]| {
        let mut s = Coalition::empty(n);
        let mut prev = value(s);
        for &p in perm {
            s = s.with(p);
            let cur = value(s);
            phi[p] += cur - prev;
            prev = cur;
        }
    };
    visit(&perm, &mut phi);
    count += 1;
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            visit(&perm, &mut phi);
            count += 1;
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    phi.iter().map(|v| v / count as f64).collect()
}
