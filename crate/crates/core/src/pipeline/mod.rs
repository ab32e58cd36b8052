//! Study orchestration: manifest validation, Shapley computation over every
//! (model, fold, subject), the consistency battery, clustering and the
//! consolidated report. All outputs live under one run directory:
//!
//! ```text
//! <out>/shapley/parts/<model>/<fold>/<subject>.json   per-subject results (resume units)
//! <out>/shapley/matrices/<metric>/<model>/<fold>.csv  contrasts x subjects
//! <out>/shapley/shapley_long.csv                      canonical long table
//! <out>/stats/<mode>/ledger.csv, intervals.csv
//! <out>/cluster/<metric>/<model>.csv
//! <out>/report/report.json, report.md
//! <out>/runs.jsonl                                    one record per invocation
//! ```

mod cluster_stage;
mod manifest;
mod output;
mod report;
mod shapley_stage;
mod stats_stage;
mod validate;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use cluster_stage::{run_cluster, ClusterOptions, ClusterRun, ClusterSummary, SweepPoint};
pub use manifest::{ClusterSettings, FoldDef, LabelDef, LoadedManifest, Manifest, ShapleyModeName, ShapleySettings, SubjectEntry};
pub use output::{read_commented_csv, CsvTable, RunRecord};
pub use report::{run_report, ReportSummary};
pub use shapley_stage::{load_long_table, run_shapley, LongRow, ShapleyOptions, ShapleySummary, SubjectFailure};
pub use stats_stage::{run_stats, StatsModeSelection, StatsOptions, StatsSummary};
pub use validate::{validate, Diagnostic, Severity, ValidationReport};

use crate::adapter::AdapterError;
use crate::cluster::ClusterError;
use crate::shapley::ShapleyError;
use crate::stats::StatsError;
use crate::volume::VolumeError;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
/// Environment variable overriding the prediction cache location.
pub const CACHE_DIR_ENV: &str = "COALSHAP_CACHE_DIR";

pub mod exit_code {
    pub const OK: i32 = 0;
    pub const VALIDATION: i32 = 2;
    pub const PARTIAL_FAILURE: i32 = 3;
    pub const INTERNAL: i32 = 4;
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("cannot parse manifest {path}: {message}")]
    ManifestParse { path: PathBuf, message: String },
    #[error("validation failed with {} error(s)", .0.errors().count())]
    Validation(ValidationReport),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("stage {0:?} has no outputs in this run directory; run it first")]
    MissingStage(String),
    #[error("{failed} of {total} subject computations failed (rate {rate:.4} above threshold {threshold})")]
    PartialFailure { failed: usize, total: usize, rate: f64, threshold: f64 },
    #[error("run interrupted after {completed} subject computations")]
    Interrupted { completed: usize },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed table {path}: {message}")]
    Table { path: PathBuf, message: String },
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Shapley(#[from] ShapleyError),
    #[error(transparent)]
    Adapter(#[from] AdapterError),
    #[error(transparent)]
    Volume(#[from] VolumeError),
}

impl PipelineError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn table(path: &Path, message: impl ToString) -> Self {
        Self::Table {
            path: path.to_path_buf(),
            message: message.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::ManifestParse { .. } | Self::Validation(_) | Self::Config(_) | Self::MissingStage(_) => exit_code::VALIDATION,
            Self::Stats(StatsError::InsufficientGroups(_)) | Self::Cluster(ClusterError::TooFewPoints { .. }) => exit_code::VALIDATION,
            Self::PartialFailure { .. } => exit_code::PARTIAL_FAILURE,
            _ => exit_code::INTERNAL,
        }
    }
}

/// A manifest plus the run directory outputs go to.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub manifest: LoadedManifest,
    pub out: PathBuf,
}

impl RunContext {
    pub fn new(manifest_path: impl AsRef<Path>, out: impl Into<PathBuf>) -> Result<Self, PipelineError> {
        Ok(Self {
            manifest: LoadedManifest::load(manifest_path)?,
            out: out.into(),
        })
    }

    pub fn shapley_dir(&self) -> PathBuf {
        self.out.join("shapley")
    }

    pub fn stats_dir(&self) -> PathBuf {
        self.out.join("stats")
    }

    pub fn cluster_dir(&self) -> PathBuf {
        self.out.join("cluster")
    }

    pub fn report_dir(&self) -> PathBuf {
        self.out.join("report")
    }

    /// Comment line opening every CSV this run writes.
    pub fn provenance_comment(&self) -> String {
        format!("# coalshap {TOOL_VERSION} manifest {}", self.manifest.hash)
    }

    /// Prediction cache base: explicit override, then the environment
    /// variable, then `<out>/cache`.
    pub fn cache_base(&self, explicit: Option<&Path>) -> PathBuf {
        if let Some(p) = explicit {
            return p.to_path_buf();
        }
        match std::env::var_os(CACHE_DIR_ENV) {
            Some(v) if !v.is_empty() => PathBuf::from(v),
            _ => self.out.join("cache"),
        }
    }
}

/// Path-safe identifier check for ids that become directory names.
pub(crate) fn is_path_safe(id: &str) -> bool {
    !id.is_empty() && id != "." && id != ".." && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}
