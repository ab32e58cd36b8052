//! Generates a four-contrast synthetic study with a low-quality subgroup and
//! one injected fold shift, then runs every pipeline stage over it.
//!
//! ```text
//! cargo run --release --example synthetic_study -- [out_dir]
//! ```

use coalshap::adapter::SyntheticModelKind;
use coalshap::pipeline::{
    run_cluster, run_report, run_shapley, run_stats, ClusterOptions, LabelDef, RunContext, ShapleyOptions,
    StatsModeSelection, StatsOptions,
};
use coalshap::synthetic::{generate_study, synthetic_model, union_model, FoldShift, QualitySplit, StudyConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("coalshap-synthetic-study"));
    let _ = std::fs::remove_dir_all(&out);

    // One label per contrast keeps the contributions of contrasts separable.
    let cfg = StudyConfig {
        name: "shifted-bimodal".into(),
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
    };
    let study = generate_study(&cfg, out.join("study"))?;
    let low = study.truth.subjects.iter().filter(|s| s.low_quality).count();
    println!("{} subjects, {low} low quality", study.truth.subjects.len());

    let ctx = RunContext::new(&study.manifest_path, out.join("run"))?;
    let shapley = run_shapley(&ctx, &ShapleyOptions::default())?;
    println!("shapley: {} subjects, {} adapter calls", shapley.computed, shapley.adapter_calls);

    let stats = run_stats(&ctx, &StatsOptions { mode: StatsModeSelection::Both, ..Default::default() })?;
    print!("{}", stats.text);

    let clusters = run_cluster(&ctx, &ClusterOptions { k: Some(2), ..Default::default() })?;
    for run in &clusters.runs {
        println!("{} / {}: silhouette {:?}", run.metric, run.model, run.silhouette);
    }
    let report = run_report(&ctx)?;
    println!("report: {}", report.markdown_path.display());
    Ok(())
}
