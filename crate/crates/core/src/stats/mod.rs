//! Hypothesis tests for explanation consistency across folds and models.

mod battery;
mod hypothesis;
pub mod special;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use battery::{consistency_battery, BatteryConfig, BatteryMode, CiReport, Ledger, LedgerEntry};
pub use hypothesis::{
    adjust_p_values, dagostino_k2, dunn, kruskal_wallis, levene, midranks, paired_mean_ci, skewness, Adjustment, Centering, MeanInterval,
    TestReport,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("sample too small: need at least {needed}, got {got}")]
    SampleTooSmall { needed: usize, got: usize },
    #[error("degenerate sample: zero variance")]
    DegenerateSample,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("insufficient groups: {0}")]
    InsufficientGroups(String),
    #[error("non-finite value in sample {0:?}")]
    NonFinite(String),
    #[error("domain error: {0}")]
    Domain(String),
}

/// A labelled sample: one channel's Shapley series for one
/// (model, fold, metric).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleGroup {
    pub label: String,
    pub values: Vec<f64>,
}

impl SampleGroup {
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            label: label.into(),
            values,
        }
    }
}

/// Default significance level for hypothesis tests.
pub const DEFAULT_ALPHA: f64 = 0.01;
/// Default confidence level for intervals.
pub const DEFAULT_CI_LEVEL: f64 = 0.95;
