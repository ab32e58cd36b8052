use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::cluster_stage::ClusterSummary;
use super::output::{write_bytes, write_json};
use super::shapley_stage::{load_long_table, matrices_from_long};
use super::stats_stage::render_summary;
use super::{PipelineError, RunContext, TOOL_VERSION};
use crate::metrics::MetricId;
use crate::shapley::ShapleyMatrix;
use crate::stats::{BatteryMode, Ledger};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastMean {
    pub metric: MetricId,
    pub model: String,
    pub contrast: String,
    pub mean_phi: f64,
    pub sd_phi: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub manifest_hash: String,
    pub tool_version: String,
    pub files: Vec<FileDigest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub study_name: String,
    pub config: serde_json::Value,
    pub matrices: Vec<ShapleyMatrix>,
    pub contrast_means: Vec<ContrastMean>,
    pub ledgers: Vec<Ledger>,
    pub clusters: ClusterSummary,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportSummary {
    pub json_path: PathBuf,
    pub markdown_path: PathBuf,
    pub report: Report,
}

fn contrast_means(matrices: &[ShapleyMatrix]) -> Vec<ContrastMean> {
    let mut out: Vec<ContrastMean> = Vec::new();
    let mut values: Vec<Vec<f64>> = Vec::new();
    for m in matrices {
        for (i, c) in m.contrasts.iter().enumerate() {
            let pos = out
                .iter()
                .position(|x| x.metric == m.metric && x.model == m.model_id && x.contrast == *c);
            let idx = pos.unwrap_or_else(|| {
                out.push(ContrastMean {
                    metric: m.metric.clone(),
                    model: m.model_id.clone(),
                    contrast: c.clone(),
                    mean_phi: 0.0,
                    sd_phi: 0.0,
                    n: 0,
                });
                values.push(vec![]);
                out.len() - 1
            });
            values[idx].extend_from_slice(m.row(i));
        }
    }
    for (cm, v) in out.iter_mut().zip(values) {
        let n = v.len() as f64;
        cm.n = v.len();
        cm.mean_phi = v.iter().sum::<f64>() / n;
        cm.sd_phi = if v.len() > 1 {
            (v.iter().map(|x| (x - cm.mean_phi).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
    }
    out
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<FileDigest>) -> Result<(), PipelineError> {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| PipelineError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    entries.sort();
    for p in entries {
        if p.is_dir() {
            collect_files(root, &p, out)?;
        } else if p.extension().is_some_and(|e| e == "csv") {
            let bytes = std::fs::read(&p).map_err(|e| PipelineError::io(&p, e))?;
            let rel = p.strip_prefix(root).unwrap_or(&p);
            out.push(FileDigest {
                path: rel.to_string_lossy().replace('\\', "/"),
                sha256: hex::encode(Sha256::digest(&bytes)),
            });
        }
    }
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| PipelineError::table(path, e))
}

fn render_markdown(ctx: &RunContext, report: &Report) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# {}\n", report.study_name);
    let _ = writeln!(s, "manifest `{}`, coalshap {TOOL_VERSION}\n", ctx.manifest.hash);
    let _ = writeln!(s, "## Mean contrast Shapley values\n");
    let mut metrics: Vec<&MetricId> = Vec::new();
    for c in &report.contrast_means {
        if !metrics.contains(&&c.metric) {
            metrics.push(&c.metric);
        }
    }
    for metric in metrics {
        let rows: Vec<&ContrastMean> = report.contrast_means.iter().filter(|c| c.metric == *metric).collect();
        let mut contrasts: Vec<&str> = Vec::new();
        let mut models: Vec<&str> = Vec::new();
        for r in &rows {
            if !contrasts.contains(&r.contrast.as_str()) {
                contrasts.push(&r.contrast);
            }
            if !models.contains(&r.model.as_str()) {
                models.push(&r.model);
            }
        }
        let _ = writeln!(s, "### {metric}\n");
        let _ = writeln!(s, "| model | {} |", contrasts.join(" | "));
        let _ = writeln!(s, "|---|{}", "---|".repeat(contrasts.len()));
        for model in models {
            let cells: Vec<String> = contrasts
                .iter()
                .map(|c| {
                    rows.iter()
                        .find(|r| r.model == model && r.contrast == *c)
                        .map_or("n/a".into(), |r| format!("{:.4} ± {:.4}", r.mean_phi, r.sd_phi))
                })
                .collect();
            let _ = writeln!(s, "| {model} | {} |", cells.join(" | "));
        }
        s.push('\n');
    }
    for ledger in &report.ledgers {
        s.push_str(&render_summary(ledger));
    }
    let _ = writeln!(s, "## Clusters\n");
    let _ = writeln!(s, "| metric | model | points | k | silhouette | PCA share |");
    let _ = writeln!(s, "|---|---|---|---|---|---|");
    for r in &report.clusters.runs {
        let sil = r.silhouette.map_or("n/a".into(), |v| format!("{v:.3}"));
        let _ = writeln!(s, "| {} | {} | {} | {} | {sil} | {:.3} |", r.metric, r.model, r.points, r.k, r.explained_share);
    }
    s
}

/// Consolidates all stage outputs of a run directory into
/// `report/report.json` and `report/report.md`.
pub fn run_report(ctx: &RunContext) -> Result<ReportSummary, PipelineError> {
    let rows = load_long_table(&ctx.shapley_dir())?;
    let matrices = matrices_from_long(&rows)?;
    let mut ledgers = Vec::new();
    for mode in [BatteryMode::AcrossFolds, BatteryMode::AcrossModels] {
        let path = ctx.stats_dir().join(mode.as_str()).join("ledger.json");
        if path.exists() {
            ledgers.push(read_json::<Ledger>(&path)?);
        }
    }
    if ledgers.is_empty() {
        return Err(PipelineError::MissingStage("stats".into()));
    }
    let cluster_path = ctx.cluster_dir().join("summary.json");
    if !cluster_path.exists() {
        return Err(PipelineError::MissingStage("cluster".into()));
    }
    let clusters: ClusterSummary = read_json(&cluster_path)?;
    let mut files = Vec::new();
    for dir in [ctx.shapley_dir(), ctx.stats_dir(), ctx.cluster_dir()] {
        collect_files(&ctx.out, &dir, &mut files)?;
    }
    let report = Report {
        study_name: ctx.manifest.manifest.study_name.clone(),
        config: serde_json::to_value(&ctx.manifest.manifest).map_err(|e| PipelineError::table(&ctx.manifest.path, e))?,
        contrast_means: contrast_means(&matrices),
        matrices,
        ledgers,
        clusters,
        provenance: Provenance {
            manifest_hash: ctx.manifest.hash.clone(),
            tool_version: TOOL_VERSION.to_string(),
            files,
        },
    };
    let json_path = ctx.report_dir().join("report.json");
    let markdown_path = ctx.report_dir().join("report.md");
    write_json(&json_path, &report)?;
    write_bytes(&markdown_path, render_markdown(ctx, &report).as_bytes())?;
    Ok(ReportSummary {
        json_path,
        markdown_path,
        report,
    })
}
