//! Explains one subject through an external model process speaking the
//! JSON-lines adapter protocol. The bundled stub decodes the revealed
//! regions from the input, so its answers match the in-process union model.
//!
//! ```text
//! cargo run --example subprocess_adapter
//! ```

use std::path::Path;
use std::time::Duration;

use coalshap::adapter::{Predictor, SubprocessPredictor};
use coalshap::metrics::{MetricConfig, MetricId, MetricRegistry};
use coalshap::shapley::{explain_subject, AblationStrategy, ExplainRequest, PredictionCache, ShapleyMode};
use coalshap::synthetic::{generate_study, StudyConfig};
use coalshap::volume::{read_mcv, read_seg};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let cfg = StudyConfig { folds: 1, subjects_per_fold: 1, base_hidden: 0.3, ..StudyConfig::default() };
    let study = generate_study(&cfg, dir.path())?;
    let entry = &study.manifest.folds[0].subjects[0];
    let input = read_mcv(dir.path().join(&entry.input))?;
    let gt = read_seg(dir.path().join(&entry.gt))?;

    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data");
    let command = ["python3", "stub_adapter.py", "ok", "1"].map(String::from).to_vec();
    let model = SubprocessPredictor::new("stub", command, 2, Duration::from_secs(30), &data)?;
    println!("{:?}", model.probe());

    let strategy = AblationStrategy::ZeroFill;
    let cache = PredictionCache::for_model(dir.path().join("cache"), model.model_id(), &strategy);
    let registry = MetricRegistry::default();
    let metric_cfg = MetricConfig::default();
    let req = ExplainRequest {
        subject_id: &entry.subject_id,
        input: &input,
        gt: &gt,
        strategy: &strategy,
        cfg: &metric_cfg,
        registry: &registry,
        cache: Some(&cache),
        mode: ShapleyMode::Exact,
    };
    for round in 1..=2 {
        let ex = explain_subject(req, &model, &[MetricId::Dice, MetricId::Hd95])?;
        println!("round {round}: {} model calls", ex.adapter_calls);
        for m in &ex.metrics {
            let phi: Vec<String> = m.values.iter().map(|v| format!("{v:+.4}")).collect();
            println!("  {:<5} score {:.4}  phi [{}]", m.metric.name(), m.score, phi.join(", "));
        }
    }
    Ok(())
}
