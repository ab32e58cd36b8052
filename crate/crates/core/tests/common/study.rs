use std::collections::BTreeMap;
use std::path::Path;

use coalshap::adapter::SyntheticModelKind;
use coalshap::metrics::MetricId;
use coalshap::pipeline::{
    run_cluster, run_report, run_shapley, run_stats, ClusterOptions, LabelDef, PipelineError, RunContext, ShapleyOptions,
    StatsModeSelection, StatsOptions,
};
use coalshap::synthetic::{generate_study, synthetic_model, union_model, FoldShift, GeneratedStudy, QualitySplit, StudyConfig};

/// Two folds of three single-label subjects, one union-reveal model.
pub fn small_config() -> StudyConfig {
    StudyConfig {
        jitter: 3,
        base_hidden: 0.5,
        seed: 5,
        ..StudyConfig::default()
    }
}

/// One label per contrast, a low-quality subgroup, and extra hidden mass
/// for contrast 1 in the third fold. Every fold repeats the same subject
/// draws, so the shift is the only between-fold difference.
pub fn shifted_config() -> StudyConfig {
    StudyConfig {
        name: "shifted".into(),
        labels: (1..=4).map(|id| LabelDef { id, name: format!("region{id}") }).collect(),
        region_labels: vec![1, 2, 3, 4],
        region_sizes: vec![10, 20, 30, 40],
        jitter: 2,
        base_hidden: 0.2,
        dims: [12, 12, 12],
        folds: 5,
        subjects_per_fold: 20,
        quality: Some(QualitySplit { low_fraction: 0.3, hidden_ratio: 4.0 }),
        shifts: vec![FoldShift { fold: 2, channel: 1, hidden_ratio: 1.0 }],
        shared_draws: true,
        models: vec![
            union_model("union"),
            synthetic_model("blind_t2f", SyntheticModelKind::IgnoreChannel { channel: 3 }, 0),
        ],
        seed: 7,
        ..StudyConfig::default()
    }
}

/// 2 metrics, 4 models, 5 folds.
pub fn battery_config() -> StudyConfig {
    StudyConfig {
        name: "battery".into(),
        labels: (1..=2).map(|id| LabelDef { id, name: format!("region{id}") }).collect(),
        region_labels: vec![1, 1, 2, 2],
        region_sizes: vec![20, 25, 30, 35],
        jitter: 6,
        base_hidden: 0.6,
        dims: [10, 10, 10],
        folds: 5,
        subjects_per_fold: 6,
        models: vec![
            union_model("union"),
            synthetic_model("noisy", SyntheticModelKind::NoisyUnion { rate: 0.01 }, 3),
            synthetic_model("blind_t1n", SyntheticModelKind::IgnoreChannel { channel: 0 }, 0),
            synthetic_model("blind_t2w", SyntheticModelKind::IgnoreChannel { channel: 2 }, 0),
        ],
        metrics: vec![MetricId::Dice, MetricId::Hd95],
        seed: 21,
        ..StudyConfig::default()
    }
}

pub fn generate(cfg: &StudyConfig, dir: &Path) -> GeneratedStudy {
    generate_study(cfg, dir.join("study")).unwrap()
}

/// Runs shapley, both stats modes, cluster and report.
pub fn run_all(ctx: &RunContext, shapley: &ShapleyOptions) -> Result<(), PipelineError> {
    run_shapley(ctx, shapley)?;
    run_stats(
        ctx,
        &StatsOptions {
            mode: StatsModeSelection::Both,
            ..Default::default()
        },
    )?;
    run_cluster(ctx, &ClusterOptions::default())?;
    run_report(ctx)?;
    Ok(())
}

/// Every CSV and the report JSON under `out`, keyed by relative path.
pub fn output_files(out: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, acc: &mut BTreeMap<String, Vec<u8>>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                if p.file_name().is_some_and(|n| n == "cache") {
                    continue;
                }
                walk(root, &p, acc);
            } else if p.extension().is_some_and(|x| x == "csv") || p.file_name().is_some_and(|n| n == "report.json") {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                acc.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    let mut acc = BTreeMap::new();
    walk(out, out, &mut acc);
    acc
}
