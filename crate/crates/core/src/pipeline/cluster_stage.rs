use serde::{Deserialize, Serialize};

use super::output::{write_csv, write_json};
use super::shapley_stage::{load_long_table, LongRow};
use super::{PipelineError, RunContext};
use crate::cluster::{kmeans, pca2, silhouette, ClusterError, KMeansConfig};
use crate::metrics::MetricId;

#[derive(Debug, Clone, Default)]
pub struct ClusterOptions {
    pub k: Option<usize>,
    pub seed: Option<u64>,
    /// Inclusive k range to sweep; overrides the manifest.
    pub sweep: Option<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub k: usize,
    pub inertia: f64,
    pub silhouette: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRun {
    pub metric: MetricId,
    pub model: String,
    pub points: usize,
    pub k: usize,
    pub inertia: f64,
    pub centers: Vec<Vec<f64>>,
    pub silhouette: Option<f64>,
    pub explained_share: f64,
    pub sweep: Vec<SweepPoint>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub runs: Vec<ClusterRun>,
    pub skipped: Vec<String>,
}

struct Pooled {
    metric: MetricId,
    model: String,
    contrasts: Vec<String>,
    /// (subject, fold, score, vector)
    subjects: Vec<(String, String, f64, Vec<f64>)>,
}

fn pool(rows: &[LongRow]) -> Vec<Pooled> {
    let mut out: Vec<Pooled> = Vec::new();
    for r in rows {
        let idx = match out.iter().position(|p| p.metric == r.metric && p.model == r.model) {
            Some(i) => i,
            None => {
                out.push(Pooled {
                    metric: r.metric.clone(),
                    model: r.model.clone(),
                    contrasts: vec![],
                    subjects: vec![],
                });
                out.len() - 1
            }
        };
        let p = &mut out[idx];
        let ci = match p.contrasts.iter().position(|c| *c == r.contrast) {
            Some(i) => i,
            None => {
                p.contrasts.push(r.contrast.clone());
                p.contrasts.len() - 1
            }
        };
        let si = match p.subjects.iter().position(|s| s.0 == r.subject_id && s.1 == r.fold) {
            Some(i) => i,
            None => {
                p.subjects.push((r.subject_id.clone(), r.fold.clone(), r.score, vec![]));
                p.subjects.len() - 1
            }
        };
        let v = &mut p.subjects[si].3;
        if v.len() <= ci {
            v.resize(ci + 1, f64::NAN);
        }
        v[ci] = r.phi;
    }
    out
}

fn cluster_one(ctx: &RunContext, p: &Pooled, k: usize, seed: u64, sweep: Option<[usize; 2]>) -> Result<ClusterRun, PipelineError> {
    let points: Vec<Vec<f64>> = p.subjects.iter().map(|s| s.3.clone()).collect();
    if points.iter().any(|v| v.len() != p.contrasts.len() || v.iter().any(|x| x.is_nan())) {
        return Err(PipelineError::Config(format!("incomplete Shapley vectors for {} / {}", p.metric, p.model)));
    }
    let result = kmeans(&points, &KMeansConfig::new(k, seed))?;
    let sil = match silhouette(&points, &result.labels) {
        Ok(s) => Some(s),
        Err(ClusterError::SingleCluster) => None,
        Err(e) => return Err(e.into()),
    };
    let projection = pca2(&points)?;
    let comment = ctx.provenance_comment();
    let dir = ctx.cluster_dir().join(p.metric.name());
    let mut header: Vec<String> = ["subject_id", "fold", "metric_score", "cluster", "pc1", "pc2"].map(String::from).to_vec();
    header.extend(p.contrasts.iter().map(|c| format!("phi_{c}")));
    let rows = p.subjects.iter().enumerate().map(|(i, (subject, fold, score, v))| {
        let mut row = vec![
            subject.clone(),
            fold.clone(),
            score.to_string(),
            result.labels[i].to_string(),
            projection.coords[i][0].to_string(),
            projection.coords[i][1].to_string(),
        ];
        row.extend(v.iter().map(|x| x.to_string()));
        row
    });
    write_csv(&dir.join(format!("{}.csv", p.model)), &comment, &header, rows)?;

    let mut sweep_points = Vec::new();
    if let Some([lo, hi]) = sweep {
        for kk in lo..=hi.min(points.len()) {
            let r = kmeans(&points, &KMeansConfig::new(kk, seed))?;
            let s = match silhouette(&points, &r.labels) {
                Ok(s) => Some(s),
                Err(ClusterError::SingleCluster) => None,
                Err(e) => return Err(e.into()),
            };
            sweep_points.push(SweepPoint {
                k: kk,
                inertia: r.inertia,
                silhouette: s,
            });
        }
        let header: Vec<String> = ["k", "inertia", "silhouette"].map(String::from).to_vec();
        let rows = sweep_points.iter().map(|s| {
            vec![
                s.k.to_string(),
                s.inertia.to_string(),
                s.silhouette.map(|v| v.to_string()).unwrap_or_default(),
            ]
        });
        write_csv(&dir.join(format!("{}_sweep.csv", p.model)), &comment, &header, rows)?;
    }
    Ok(ClusterRun {
        metric: p.metric.clone(),
        model: p.model.clone(),
        points: points.len(),
        k,
        inertia: result.inertia,
        centers: result.centers.clone(),
        silhouette: sil,
        explained_share: projection.explained_share,
        sweep: sweep_points,
    })
}

/// Pools subject vectors across folds per (metric, model), clusters them,
/// projects them to two dimensions and writes one CSV per pool.
pub fn run_cluster(ctx: &RunContext, opts: &ClusterOptions) -> Result<ClusterSummary, PipelineError> {
    let rows = load_long_table(&ctx.shapley_dir())?;
    let settings = &ctx.manifest.manifest.cluster;
    let k = opts.k.unwrap_or(settings.k);
    let seed = opts.seed.unwrap_or(settings.seed);
    let sweep = opts.sweep.or(settings.sweep);
    if k == 0 {
        return Err(PipelineError::Config("k must be at least 1".into()));
    }
    if let Some([lo, hi]) = sweep {
        if lo < 2 || hi < lo {
            return Err(PipelineError::Config(format!("sweep range [{lo}, {hi}] must satisfy 2 <= lo <= hi")));
        }
    }
    let mut summary = ClusterSummary::default();
    let mut last_err = None;
    for p in pool(&rows) {
        match cluster_one(ctx, &p, k, seed, sweep) {
            Ok(run) => summary.runs.push(run),
            Err(PipelineError::Cluster(e @ ClusterError::TooFewPoints { .. })) => {
                log::warn!("{} / {}: {e}", p.metric, p.model);
                summary.skipped.push(format!("{} / {}: {e}", p.metric, p.model));
                last_err = Some(e);
            }
            Err(e) => return Err(e),
        }
    }
    if summary.runs.is_empty() {
        if let Some(e) = last_err {
            return Err(e.into());
        }
    }
    write_json(&ctx.cluster_dir().join("summary.json"), &summary)?;
    Ok(summary)
}
