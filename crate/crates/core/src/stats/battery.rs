use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hypothesis::{dagostino_k2, dunn, kruskal_wallis, levene, paired_mean_ci, Adjustment, Centering, TestReport, K2_MIN_SAMPLE};
use super::{SampleGroup, StatsError, DEFAULT_ALPHA, DEFAULT_CI_LEVEL};
use crate::shapley::ShapleyMatrix;

const DEGENERATE_SPREAD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BatteryMode {
    /// Groups are folds of one (metric, model, contrast).
    #[default]
    AcrossFolds,
    /// Groups are models of one (metric, fold, contrast).
    AcrossModels,
}

impl BatteryMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::AcrossFolds => "across_folds",
            Self::AcrossModels => "across_models",
        }
    }
}

impl FromStr for BatteryMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "across_folds" | "folds" => Ok(Self::AcrossFolds),
            "across_models" | "models" => Ok(Self::AcrossModels),
            _ => Err(format!("unknown battery mode {s:?} (across_folds|across_models)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BatteryConfig {
    pub alpha: f64,
    pub ci_level: f64,
    pub adjustment: Adjustment,
    pub levene_centering: Centering,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            ci_level: DEFAULT_CI_LEVEL,
            adjustment: Adjustment::Holm,
            levene_centering: Centering::Mean,
        }
    }
}

/// One row of the ledger. `scope` is the model id in across-fold mode and
/// the fold id in across-model mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub metric: String,
    pub contrast: String,
    pub scope: String,
    pub report: TestReport,
}

/// Interval for the mean paired difference `model_a - model_b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiReport {
    pub metric: String,
    pub contrast: String,
    pub fold: String,
    pub model_a: String,
    pub model_b: String,
    pub level: f64,
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    /// K² p-value of the differences; absent when n is below the test floor.
    pub normality_p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedCombination {
    pub metric: String,
    pub contrast: String,
    pub scope: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Ledger {
    pub mode: BatteryMode,
    pub config: BatteryConfig,
    pub entries: Vec<LedgerEntry>,
    pub intervals: Vec<CiReport>,
    pub skipped: Vec<SkippedCombination>,
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl Ledger {
    pub fn count(&self, test_name: &str) -> usize {
        self.entries.iter().filter(|e| e.report.test_name == test_name).count()
    }

    pub fn rejections(&self) -> impl Iterator<Item = &LedgerEntry> {
        self.entries.iter().filter(|e| e.report.reject)
    }

    pub const LEDGER_COLUMNS: [&'static str; 11] =
        ["metric", "contrast", "scope", "groups", "test", "statistic", "df1", "df2", "p_raw", "p_adj", "reject"];
    pub const CI_COLUMNS: [&'static str; 9] = ["metric", "contrast", "fold", "model_a", "model_b", "level", "lo", "hi", "n"];

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::LEDGER_COLUMNS)?;
        for e in &self.entries {
            let r = &e.report;
            w.write_record([
                e.metric.clone(),
                e.contrast.clone(),
                e.scope.clone(),
                r.groups.join("|"),
                r.test_name.clone(),
                r.statistic.to_string(),
                fmt_opt(r.df1),
                fmt_opt(r.df2),
                r.p_raw.to_string(),
                r.p_value.to_string(),
                r.reject.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_ci_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::CI_COLUMNS)?;
        for c in &self.intervals {
            w.write_record([
                c.metric.clone(),
                c.contrast.clone(),
                c.fold.clone(),
                c.model_a.clone(),
                c.model_b.clone(),
                c.level.to_string(),
                c.lo.to_string(),
                c.hi.to_string(),
                c.n.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

struct Combination<'a> {
    metric: String,
    contrast: String,
    scope: String,
    /// (group label, matrix, row index of the contrast)
    members: Vec<(String, &'a ShapleyMatrix, usize)>,
}

fn combinations(matrices: &[ShapleyMatrix], mode: BatteryMode) -> Result<Vec<Combination<'_>>, StatsError> {
    let mut seen = std::collections::HashSet::new();
    for m in matrices {
        if !seen.insert((m.metric.to_string(), m.model_id.as_str(), m.fold.as_str())) {
            return Err(StatsError::Domain(format!(
                "duplicate matrix for metric {}, model {}, fold {}",
                m.metric, m.model_id, m.fold
            )));
        }
    }
    let mut combos: Vec<Combination> = Vec::new();
    for m in matrices {
        let scope = match mode {
            BatteryMode::AcrossFolds => &m.model_id,
            BatteryMode::AcrossModels => &m.fold,
        };
        let label = match mode {
            BatteryMode::AcrossFolds => &m.fold,
            BatteryMode::AcrossModels => &m.model_id,
        };
        let metric = m.metric.to_string();
        for (i, contrast) in m.contrasts.iter().enumerate() {
            let pos = combos
                .iter()
                .position(|c| c.metric == metric && c.contrast == *contrast && c.scope == *scope);
            let member = (label.clone(), m, i);
            match pos {
                Some(p) => combos[p].members.push(member),
                None => combos.push(Combination {
                    metric: metric.clone(),
                    contrast: contrast.clone(),
                    scope: scope.clone(),
                    members: vec![member],
                }),
            }
        }
    }
    Ok(combos)
}

struct ComboOutcome {
    entries: Vec<LedgerEntry>,
    intervals: Vec<CiReport>,
    skipped: Option<SkippedCombination>,
}

fn paired_intervals(combo: &Combination, cfg: &BatteryConfig, entries: &mut Vec<LedgerEntry>) -> Vec<CiReport> {
    let mut out = Vec::new();
    for a in 0..combo.members.len() {
        for b in a + 1..combo.members.len() {
            let (ref name_a, ma, ia) = combo.members[a];
            let (ref name_b, mb, ib) = combo.members[b];
            let row_b = mb.row(ib);
            let mut x = Vec::new();
            let mut y = Vec::new();
            for (ja, subject) in ma.subjects.iter().enumerate() {
                if let Some(jb) = mb.subjects.iter().position(|s| s == subject) {
                    x.push(ma.row(ia)[ja]);
                    y.push(row_b[jb]);
                }
            }
            let d: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p - q).collect();
            let scale = x.iter().chain(&y).fold(1.0f64, |m, v| m.max(v.abs()));
            let d_mean = d.iter().sum::<f64>() / d.len().max(1) as f64;
            let spread = d.iter().fold(0.0f64, |m, v| m.max((v - d_mean).abs()));
            // differences equal up to rounding carry no shape to test
            let normality = if d.len() >= K2_MIN_SAMPLE && spread > DEGENERATE_SPREAD * scale {
                match dagostino_k2(&d, cfg.alpha) {
                    Ok(mut r) => {
                        r.groups = vec![name_a.clone(), name_b.clone()];
                        entries.push(LedgerEntry {
                            metric: combo.metric.clone(),
                            contrast: combo.contrast.clone(),
                            scope: combo.scope.clone(),
                            report: r.clone(),
                        });
                        if r.reject {
                            continue;
                        }
                        Some(r.p_value)
                    }
                    // constant differences: the interval degenerates and needs no normality
                    Err(StatsError::DegenerateSample) => None,
                    Err(_) => continue,
                }
            } else {
                None
            };
            let Ok(ci) = paired_mean_ci(&x, &y, cfg.ci_level) else {
                continue;
            };
            out.push(CiReport {
                metric: combo.metric.clone(),
                contrast: combo.contrast.clone(),
                fold: combo.scope.clone(),
                model_a: name_a.clone(),
                model_b: name_b.clone(),
                level: cfg.ci_level,
                mean: ci.mean,
                lo: ci.lo,
                hi: ci.hi,
                n: ci.n,
                normality_p: normality,
            });
        }
    }
    out
}

fn run_combination(combo: &Combination, mode: BatteryMode, cfg: &BatteryConfig) -> ComboOutcome {
    let groups: Vec<SampleGroup> = combo
        .members
        .iter()
        .map(|(label, m, i)| SampleGroup::new(label.clone(), m.row(*i).to_vec()))
        .collect();
    let entry = |report: TestReport| LedgerEntry {
        metric: combo.metric.clone(),
        contrast: combo.contrast.clone(),
        scope: combo.scope.clone(),
        report,
    };
    let skip = |e: StatsError| ComboOutcome {
        entries: vec![],
        intervals: vec![],
        skipped: Some(SkippedCombination {
            metric: combo.metric.clone(),
            contrast: combo.contrast.clone(),
            scope: combo.scope.clone(),
            reason: e.to_string(),
        }),
    };
    let lev = match levene(&groups, cfg.levene_centering, cfg.alpha) {
        Ok(r) => r,
        Err(e) => return skip(e),
    };
    let kw = match kruskal_wallis(&groups, cfg.alpha) {
        Ok(r) => r,
        Err(e) => return skip(e),
    };
    let kw_rejects = kw.reject;
    let mut entries = vec![entry(lev), entry(kw)];
    if kw_rejects {
        match dunn(&groups, cfg.adjustment, cfg.alpha) {
            Ok(pairs) => entries.extend(pairs.into_iter().map(entry)),
            Err(e) => log::warn!("dunn failed for {} {} {}: {e}", combo.metric, combo.contrast, combo.scope),
        }
    }
    let intervals = match mode {
        BatteryMode::AcrossModels => paired_intervals(combo, cfg, &mut entries),
        BatteryMode::AcrossFolds => vec![],
    };
    ComboOutcome {
        entries,
        intervals,
        skipped: None,
    }
}

/// Runs Levene and Kruskal–Wallis on every (metric, contrast, scope)
/// combination, Dunn where Kruskal–Wallis rejects, and in across-model mode
/// paired mean-difference intervals for every model pair whose differences
/// pass the normality check. Combinations with fewer than two groups are
/// recorded as skipped; if nothing is testable the call fails.
pub fn consistency_battery(matrices: &[ShapleyMatrix], mode: BatteryMode, cfg: &BatteryConfig) -> Result<Ledger, StatsError> {
    let combos = combinations(matrices, mode)?;
    let outcomes: Vec<ComboOutcome> = combos.par_iter().map(|c| run_combination(c, mode, cfg)).collect();
    let mut ledger = Ledger {
        mode,
        config: *cfg,
        ..Ledger::default()
    };
    for o in outcomes {
        ledger.entries.extend(o.entries);
        ledger.intervals.extend(o.intervals);
        ledger.skipped.extend(o.skipped);
    }
    if ledger.entries.is_empty() {
        let what = match mode {
            BatteryMode::AcrossFolds => "folds",
            BatteryMode::AcrossModels => "models",
        };
        return Err(StatsError::InsufficientGroups(format!(
            "no combination has at least 2 {what} with 3 or more subjects"
        )));
    }
    Ok(ledger)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::MetricId;

    fn matrix(model: &str, fold: &str, rows: &[Vec<f64>]) -> ShapleyMatrix {
        let j = rows[0].len();
        ShapleyMatrix {
            metric: MetricId::Dice,
            model_id: model.into(),
            fold: fold.into(),
            contrasts: (0..rows.len()).map(|i| format!("c{i}")).collect(),
            subjects: (0..j).map(|s| format!("{fold}-s{s}")).collect(),
            values: rows.concat(),
        }
    }

    #[test]
    fn identical_folds_never_reject() {
        let rows = vec![vec![0.1, 0.3, 0.2, 0.5], vec![0.0, 0.4, 0.4, 0.1]];
        let ms: Vec<_> = ["f0", "f1", "f2"].iter().map(|f| matrix("m", f, &rows)).collect();
        let ledger = consistency_battery(&ms, BatteryMode::AcrossFolds, &BatteryConfig::default()).unwrap();
        assert_eq!(ledger.count("levene"), 2);
        assert_eq!(ledger.count("kruskal_wallis"), 2);
        assert!(ledger.entries.iter().all(|e| e.report.p_value == 1.0 && !e.report.reject));
    }

    #[test]
    fn single_group_is_insufficient() {
        let ms = vec![matrix("m", "f0", &[vec![0.1, 0.2, 0.3]])];
        assert!(matches!(
            consistency_battery(&ms, BatteryMode::AcrossFolds, &BatteryConfig::default()),
            Err(StatsError::InsufficientGroups(_))
        ));
    }

    #[test]
    fn across_models_pairs_by_subject() {
        let a = matrix("a", "f0", &[vec![1.0, 2.0, 3.0, 4.0]]);
        let mut b = matrix("b", "f0", &[vec![2.0, 1.0, 0.0, -1.0]]);
        b.subjects.reverse();
        let ledger = consistency_battery(&[a, b], BatteryMode::AcrossModels, &BatteryConfig::default()).unwrap();
        assert_eq!(ledger.intervals.len(), 1);
        let ci = &ledger.intervals[0];
        assert_eq!((ci.lo, ci.hi, ci.n), (2.0, 2.0, 4));
        let mut buf = Vec::new();
        ledger.write_ci_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("metric,contrast,fold,model_a,model_b,level,lo,hi,n\n"));
        assert!(text.contains("dice,c0,f0,a,b,0.95,2,2,4"));
    }

    #[test]
    fn duplicate_matrices_rejected() {
        let m = matrix("m", "f0", &[vec![0.1, 0.2, 0.3]]);
        assert!(consistency_battery(&[m.clone(), m], BatteryMode::AcrossFolds, &BatteryConfig::default()).is_err());
    }
}
