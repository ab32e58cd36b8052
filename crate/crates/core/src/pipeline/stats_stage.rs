use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::output::{write_bytes, write_csv, write_json, write_with_comment};
use super::shapley_stage::{load_long_table, matrices_from_long};
use super::{PipelineError, RunContext};
use crate::stats::{consistency_battery, BatteryConfig, BatteryMode, Ledger, StatsError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatsModeSelection {
    #[default]
    AcrossFolds,
    AcrossModels,
    Both,
}

impl StatsModeSelection {
    pub fn modes(self) -> Vec<BatteryMode> {
        match self {
            Self::AcrossFolds => vec![BatteryMode::AcrossFolds],
            Self::AcrossModels => vec![BatteryMode::AcrossModels],
            Self::Both => vec![BatteryMode::AcrossFolds, BatteryMode::AcrossModels],
        }
    }
}

impl FromStr for StatsModeSelection {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "both" => Ok(Self::Both),
            other => match other.parse::<BatteryMode>()? {
                BatteryMode::AcrossFolds => Ok(Self::AcrossFolds),
                BatteryMode::AcrossModels => Ok(Self::AcrossModels),
            },
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct StatsOptions {
    pub mode: StatsModeSelection,
    pub alpha: Option<f64>,
    pub ci_level: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatsSummary {
    pub ledgers: Vec<Ledger>,
    /// Markdown rendering of rejections and interval tables.
    pub text: String,
}

fn fmt_p(p: f64) -> String {
    if p < 1e-4 {
        format!("{p:.2e}")
    } else {
        format!("{p:.4}")
    }
}

/// Rejections as a table, then Dunn post-hoc tables, then for across-model
/// runs one interval table per (metric, contrast) with model pairs as rows
/// and folds as columns.
pub(crate) fn render_summary(ledger: &Ledger) -> String {
    let mut s = String::new();
    let mode = ledger.mode.as_str();
    let _ = writeln!(s, "## Consistency battery ({mode}), alpha = {}\n", ledger.config.alpha);
    let _ = writeln!(
        s,
        "{} Levene, {} Kruskal-Wallis, {} Dunn pairs; {} combinations skipped.\n",
        ledger.count("levene") + ledger.count("brown_forsythe"),
        ledger.count("kruskal_wallis"),
        ledger.count("dunn"),
        ledger.skipped.len()
    );
    let rejected: Vec<_> = ledger.rejections().filter(|e| e.report.test_name != "dunn").collect();
    if rejected.is_empty() {
        let _ = writeln!(s, "No variance or location test rejects.\n");
    } else {
        let _ = writeln!(s, "| metric | contrast | scope | test | statistic | p |");
        let _ = writeln!(s, "|---|---|---|---|---|---|");
        for e in rejected {
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} | {:.4} | {} |",
                e.metric,
                e.contrast,
                e.scope,
                e.report.test_name,
                e.report.statistic,
                fmt_p(e.report.p_value)
            );
        }
        s.push('\n');
    }
    let dunn: Vec<_> = ledger.entries.iter().filter(|e| e.report.test_name == "dunn").collect();
    if !dunn.is_empty() {
        let _ = writeln!(s, "### Post-hoc (Dunn, {:?} adjustment)\n", ledger.config.adjustment);
        let _ = writeln!(s, "| metric | contrast | scope | pair | z | p_adj | reject |");
        let _ = writeln!(s, "|---|---|---|---|---|---|---|");
        for e in dunn {
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} | {:.4} | {} | {} |",
                e.metric,
                e.contrast,
                e.scope,
                e.report.groups.join(" vs "),
                e.report.statistic,
                fmt_p(e.report.p_value),
                if e.report.reject { "yes" } else { "no" }
            );
        }
        s.push('\n');
    }
    if ledger.mode == BatteryMode::AcrossModels {
        let mut keys: Vec<(String, String)> = Vec::new();
        let mut folds: Vec<String> = Vec::new();
        for c in &ledger.intervals {
            let k = (c.metric.clone(), c.contrast.clone());
            if !keys.contains(&k) {
                keys.push(k);
            }
            if !folds.contains(&c.fold) {
                folds.push(c.fold.clone());
            }
        }
        for (metric, contrast) in keys {
            let level = ledger.config.ci_level * 100.0;
            let _ = writeln!(s, "### {level}% intervals of mean difference: {metric}, {contrast}\n");
            let _ = writeln!(s, "| pair | {} |", folds.join(" | "));
            let _ = writeln!(s, "|---|{}", "---|".repeat(folds.len()));
            let mut pairs: Vec<(String, String)> = Vec::new();
            for c in ledger.intervals.iter().filter(|c| c.metric == metric && c.contrast == contrast) {
                let p = (c.model_a.clone(), c.model_b.clone());
                if !pairs.contains(&p) {
                    pairs.push(p);
                }
            }
            for (a, b) in pairs {
                let cells: Vec<String> = folds
                    .iter()
                    .map(|f| {
                        ledger
                            .intervals
                            .iter()
                            .find(|c| c.metric == metric && c.contrast == contrast && c.model_a == a && c.model_b == b && c.fold == *f)
                            .map_or("n/a".to_string(), |c| format!("[{}, {}]", two_places(c.lo), two_places(c.hi)))
                    })
                    .collect();
                let _ = writeln!(s, "| {a} - {b} | {} |", cells.join(" | "));
            }
            s.push('\n');
        }
    }
    s
}

/// Runs the consistency battery over the long Shapley table of this run
/// directory and writes ledgers, intervals and a markdown digest per mode.
pub fn run_stats(ctx: &RunContext, opts: &StatsOptions) -> Result<StatsSummary, PipelineError> {
    let rows = load_long_table(&ctx.shapley_dir())?;
    let matrices = matrices_from_long(&rows)?;
    let mut cfg: BatteryConfig = ctx.manifest.manifest.stats;
    if let Some(a) = opts.alpha {
        cfg.alpha = a;
    }
    if let Some(l) = opts.ci_level {
        cfg.ci_level = l;
    }
    for (name, v) in [("alpha", cfg.alpha), ("ci level", cfg.ci_level)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(PipelineError::Config(format!("{name} {v} must lie in (0, 1)")));
        }
    }
    let comment = ctx.provenance_comment();
    let mut ledgers = Vec::new();
    let mut text = String::new();
    let modes = opts.mode.modes();
    let mut last_err = None;
    for &mode in &modes {
        let ledger = match consistency_battery(&matrices, mode, &cfg) {
            Ok(l) => l,
            // with both modes requested, one may be impossible (e.g. a single model)
            Err(e @ StatsError::InsufficientGroups(_)) if modes.len() > 1 => {
                log::warn!("{}: {e}", mode.as_str());
                last_err = Some(e);
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let dir = ctx.stats_dir().join(mode.as_str());
        let mut buf = Vec::new();
        ledger.write_csv(&mut buf).map_err(|e| PipelineError::table(&dir, e))?;
        write_with_comment(&dir.join("ledger.csv"), &comment, &buf)?;
        if mode == BatteryMode::AcrossModels {
            let mut buf = Vec::new();
            ledger.write_ci_csv(&mut buf).map_err(|e| PipelineError::table(&dir, e))?;
            write_with_comment(&dir.join("intervals.csv"), &comment, &buf)?;
        }
        let header: Vec<String> = ["metric", "contrast", "scope", "reason"].map(String::from).to_vec();
        let rows = ledger
            .skipped
            .iter()
            .map(|k| vec![k.metric.clone(), k.contrast.clone(), k.scope.clone(), k.reason.clone()]);
        write_csv(&dir.join("skipped.csv"), &comment, &header, rows)?;
        write_json(&dir.join("ledger.json"), &ledger)?;
        let digest = render_summary(&ledger);
        write_bytes(&dir.join("summary.md"), digest.as_bytes())?;
        text.push_str(&digest);
        ledgers.push(ledger);
    }
    if ledgers.is_empty() {
        if let Some(e) = last_err {
            return Err(e.into());
        }
    }
    Ok(StatsSummary { ledgers, text })
}

/// Two decimals without a sign on values that round to zero.
fn two_places(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}
