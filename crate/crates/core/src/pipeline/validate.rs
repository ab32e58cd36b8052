use std::collections::HashSet;
use std::fmt;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::manifest::{LoadedManifest, ShapleyModeName, SubjectEntry};
use super::{is_path_safe, PipelineError};
use crate::adapter::build_predictor;
use crate::metrics::MetricRegistry;
use crate::shapley::MAX_EXACT_PLAYERS;
use crate::volume::{read_mcv, read_seg, LabelMap, MultiContrastVolume};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: String,
    pub message: String,
    pub path: Option<PathBuf>,
}

impl Diagnostic {
    fn error(code: &str, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Error,
            code: code.into(),
            message: message.into(),
            path: None,
        }
    }

    fn warning(code: &str, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Warning,
            ..Self::error(code, message)
        }
    }

    fn at(mut self, path: PathBuf) -> Self {
        self.path = Some(path);
        self
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev}[{}]: {}", self.code, self.message)?;
        if let Some(p) = &self.path {
            write!(f, " ({})", p.display())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub diagnostics: Vec<Diagnostic>,
}

impl ValidationReport {
    pub fn errors(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics.iter().filter(|d| d.severity == Severity::Error)
    }

    pub fn is_ok(&self) -> bool {
        self.errors().next().is_none()
    }

    pub fn with_code(&self, code: &str) -> Vec<&Diagnostic> {
        self.diagnostics.iter().filter(|d| d.code == code).collect()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.diagnostics {
            writeln!(f, "{d}")?;
        }
        if self.is_ok() {
            writeln!(f, "ok")?;
        }
        Ok(())
    }
}

fn duplicates<'a>(items: impl IntoIterator<Item = &'a str>) -> Vec<&'a str> {
    let mut seen = HashSet::new();
    let mut dup = Vec::new();
    for i in items {
        if !seen.insert(i) && !dup.contains(&i) {
            dup.push(i);
        }
    }
    dup
}

fn check_structure(lm: &LoadedManifest, out: &mut Vec<Diagnostic>) {
    let m = &lm.manifest;
    if m.channels.is_empty() {
        out.push(Diagnostic::error("no_channels", "manifest declares no channels"));
    }
    if m.channels.len() > MAX_EXACT_PLAYERS && m.shapley.mode == ShapleyModeName::Exact {
        out.push(Diagnostic::error(
            "too_many_channels",
            format!("{} channels exceed the exact-enumeration limit of {MAX_EXACT_PLAYERS}; use mode \"mc\"", m.channels.len()),
        ));
    }
    for d in duplicates(m.channels.iter().map(String::as_str)) {
        out.push(Diagnostic::error("duplicate_channel", format!("channel {d:?} declared twice")));
    }
    if m.labels.is_empty() {
        out.push(Diagnostic::error("no_labels", "manifest declares no labels"));
    }
    if m.labels.iter().any(|l| l.id == 0) {
        out.push(Diagnostic::error("background_label", "label id 0 is reserved for background"));
    }
    if m.label_set().len() != m.labels.len() {
        out.push(Diagnostic::error("duplicate_label", "label ids must be unique"));
    }
    for (what, empty) in [("fold", m.folds.is_empty()), ("model", m.models.is_empty()), ("metric", m.metrics.is_empty())] {
        if empty {
            out.push(Diagnostic::error("empty_section", format!("manifest needs at least one {what}")));
        }
    }
    for d in duplicates(m.folds.iter().map(|f| f.fold_id.as_str())) {
        out.push(Diagnostic::error("duplicate_fold", format!("fold {d:?} declared twice")));
    }
    for d in duplicates(m.models.iter().map(|s| s.model_id.as_str())) {
        out.push(Diagnostic::error("duplicate_model", format!("model {d:?} declared twice")));
    }
    for d in duplicates(m.metrics.iter().map(|x| x.name())) {
        out.push(Diagnostic::error("duplicate_metric", format!("metric {d:?} listed twice")));
    }
    let registry = MetricRegistry::default();
    for metric in &m.metrics {
        if !registry.contains(metric) {
            out.push(Diagnostic::error("unknown_metric", format!("metric {metric:?} is not registered")));
        }
    }
    for f in &m.folds {
        if !is_path_safe(&f.fold_id) {
            out.push(Diagnostic::error("bad_id", format!("fold id {:?} must use [A-Za-z0-9._-]", f.fold_id)));
        }
        if f.subjects.is_empty() {
            out.push(Diagnostic::warning("empty_fold", format!("fold {:?} has no subjects", f.fold_id)));
        }
        for d in duplicates(f.subjects.iter().map(|s| s.subject_id.as_str())) {
            out.push(Diagnostic::error("duplicate_subject", format!("subject {d:?} appears twice in fold {:?}", f.fold_id)));
        }
        for s in &f.subjects {
            if !is_path_safe(&s.subject_id) {
                out.push(Diagnostic::error("bad_id", format!("subject id {:?} must use [A-Za-z0-9._-]", s.subject_id)));
            }
        }
    }
    for spec in &m.models {
        if !is_path_safe(&spec.model_id) {
            out.push(Diagnostic::error("bad_id", format!("model id {:?} must use [A-Za-z0-9._-]", spec.model_id)));
        }
    }
    if let Err(e) = m.shapley.strategy() {
        out.push(Diagnostic::error("bad_strategy", e.to_string()));
    }
    if m.shapley.mode == ShapleyModeName::Mc && m.shapley.permutations == 0 {
        out.push(Diagnostic::error("bad_permutations", "Monte-Carlo mode needs at least one permutation"));
    }
    for (name, v) in [("alpha", m.stats.alpha), ("ci_level", m.stats.ci_level)] {
        if !(v > 0.0 && v < 1.0) {
            out.push(Diagnostic::error("bad_stats", format!("stats.{name} = {v} must lie in (0, 1)")));
        }
    }
    if m.cluster.k == 0 {
        out.push(Diagnostic::error("bad_cluster", "cluster.k must be at least 1"));
    }
    if let Some([lo, hi]) = m.cluster.sweep {
        if lo < 2 || hi < lo {
            out.push(Diagnostic::error("bad_cluster", format!("cluster.sweep [{lo}, {hi}] must satisfy 2 <= lo <= hi")));
        }
    }
}

/// Reads one subject's input and ground truth, applying the manifest's
/// channel policy.
pub(crate) fn load_subject(lm: &LoadedManifest, entry: &SubjectEntry) -> Result<(MultiContrastVolume, LabelMap), PipelineError> {
    let input = read_mcv(lm.resolve(&entry.input))?;
    let input = if input.channel_names() != lm.manifest.channels.as_slice() && lm.manifest.reorder_channels {
        input.reordered(&lm.manifest.channels)?
    } else {
        input
    };
    let gt = read_seg(lm.resolve(&entry.gt))?;
    Ok((input, gt))
}

fn check_subject(lm: &LoadedManifest, fold: &str, entry: &SubjectEntry) -> Vec<Diagnostic> {
    let m = &lm.manifest;
    let mut out = Vec::new();
    let who = format!("fold {fold:?} subject {:?}", entry.subject_id);
    let input_path = lm.resolve(&entry.input);
    let gt_path = lm.resolve(&entry.gt);
    let mut input = None;
    if !input_path.exists() {
        out.push(Diagnostic::error("missing_file", format!("{who}: input volume not found")).at(input_path.clone()));
    } else {
        match read_mcv(&input_path) {
            Err(e) => out.push(Diagnostic::error("bad_input", format!("{who}: {e}")).at(input_path.clone())),
            Ok(v) => {
                let names = v.channel_names();
                if names != m.channels.as_slice() {
                    let mut a = names.to_vec();
                    let mut b = m.channels.clone();
                    a.sort();
                    b.sort();
                    let orders = format!("manifest order [{}], file order [{}]", m.channels.join(", "), names.join(", "));
                    if a != b {
                        out.push(Diagnostic::error("channel_mismatch", format!("{who}: channel names differ: {orders}")).at(input_path.clone()));
                    } else if m.reorder_channels {
                        out.push(Diagnostic::warning("channel_reordered", format!("{who}: channels will be reordered: {orders}")).at(input_path.clone()));
                    } else {
                        out.push(Diagnostic::error("channel_order", format!("{who}: channel order mismatch: {orders}")).at(input_path.clone()));
                    }
                }
                input = Some(v);
            }
        }
    }
    if !gt_path.exists() {
        out.push(Diagnostic::error("missing_file", format!("{who}: ground truth not found")).at(gt_path));
        return out;
    }
    match read_seg(&gt_path) {
        Err(e) => out.push(Diagnostic::error("bad_gt", format!("{who}: {e}")).at(gt_path)),
        Ok(gt) => {
            if gt.label_set() != m.label_set().as_slice() {
                out.push(
                    Diagnostic::error(
                        "label_set_mismatch",
                        format!("{who}: ground truth declares labels {:?}, manifest {:?}", gt.label_set(), m.label_set()),
                    )
                    .at(gt_path.clone()),
                );
            }
            if let Some(v) = &input {
                if v.dims() != gt.dims() || v.spacing() != gt.spacing() {
                    out.push(
                        Diagnostic::error(
                            "geometry_mismatch",
                            format!(
                                "{who}: input {:?} spacing {:?} vs ground truth {:?} spacing {:?}",
                                v.dims().as_array(),
                                v.spacing().0,
                                gt.dims().as_array(),
                                gt.spacing().0
                            ),
                        )
                        .at(gt_path),
                    );
                }
            }
        }
    }
    out
}

/// Checks manifest structure, every referenced file and, when `probe` is
/// set, adapter reachability. Never fails; problems become diagnostics.
pub fn validate(lm: &LoadedManifest, probe: bool) -> ValidationReport {
    let mut diagnostics = Vec::new();
    check_structure(lm, &mut diagnostics);
    let subjects: Vec<(&str, &SubjectEntry)> = lm
        .manifest
        .folds
        .iter()
        .flat_map(|f| f.subjects.iter().map(move |s| (f.fold_id.as_str(), s)))
        .collect();
    let per_subject: Vec<Vec<Diagnostic>> = subjects.par_iter().map(|(f, s)| check_subject(lm, f, s)).collect();
    diagnostics.extend(per_subject.into_iter().flatten());
    if probe {
        let label_set = lm.manifest.label_set();
        for spec in &lm.manifest.models {
            match build_predictor(spec, &lm.dir, &label_set) {
                Err(e) => diagnostics.push(Diagnostic::error("adapter_spec", format!("model {:?}: {e}", spec.model_id))),
                Ok(p) => {
                    let report = p.probe();
                    if !report.reachable {
                        diagnostics.push(Diagnostic::error(
                            "adapter_unreachable",
                            format!("model {:?}: {}", spec.model_id, report.reason.unwrap_or_default()),
                        ));
                    }
                }
            }
        }
    }
    ValidationReport { diagnostics }
}
