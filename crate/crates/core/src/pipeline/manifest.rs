use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::PipelineError;
use crate::adapter::AdapterSpec;
use crate::metrics::{MetricConfig, MetricId};
use crate::shapley::{AblationStrategy, ShapleyMode};
use crate::stats::BatteryConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelDef {
    pub id: u8,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubjectEntry {
    pub subject_id: String,
    pub input: PathBuf,
    pub gt: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FoldDef {
    pub fold_id: String,
    pub subjects: Vec<SubjectEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ShapleyModeName {
    #[default]
    Exact,
    Mc,
}

impl std::str::FromStr for ShapleyModeName {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(Self::Exact),
            "mc" | "monte_carlo" => Ok(Self::Mc),
            other => Err(format!("unknown Shapley mode {other:?} (exact, mc)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShapleySettings {
    /// `zero`, `mean`, `const:<value>` or `noise:<seed>:<sigma>`.
    pub strategy: String,
    pub seed: u64,
    pub mode: ShapleyModeName,
    pub permutations: usize,
}

impl Default for ShapleySettings {
    fn default() -> Self {
        Self {
            strategy: "zero".into(),
            seed: 0,
            mode: ShapleyModeName::Exact,
            permutations: 2000,
        }
    }
}

impl ShapleySettings {
    pub fn strategy(&self) -> Result<AblationStrategy, PipelineError> {
        self.strategy.parse().map_err(PipelineError::Config)
    }

    pub fn mode(&self) -> ShapleyMode {
        match self.mode {
            ShapleyModeName::Exact => ShapleyMode::Exact,
            ShapleyModeName::Mc => ShapleyMode::MonteCarlo {
                permutations: self.permutations,
                seed: self.seed,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterSettings {
    pub k: usize,
    /// Inclusive k range to sweep, e.g. `[2, 6]`.
    pub sweep: Option<[usize; 2]>,
    pub seed: u64,
}

impl Default for ClusterSettings {
    fn default() -> Self {
        Self { k: 2, sweep: None, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub study_name: String,
    pub channels: Vec<String>,
    pub labels: Vec<LabelDef>,
    pub folds: Vec<FoldDef>,
    pub models: Vec<AdapterSpec>,
    pub metrics: Vec<MetricId>,
    #[serde(default)]
    pub metric_config: MetricConfig,
    #[serde(default)]
    pub shapley: ShapleySettings,
    #[serde(default)]
    pub stats: BatteryConfig,
    #[serde(default)]
    pub cluster: ClusterSettings,
    /// Accept inputs whose channels are a permutation of `channels` and
    /// reorder them by name.
    #[serde(default)]
    pub reorder_channels: bool,
}

impl Manifest {
    /// Sorted label ids.
    pub fn label_set(&self) -> Vec<u8> {
        let mut ids: Vec<u8> = self.labels.iter().map(|l| l.id).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub fn subject_count(&self) -> usize {
        self.folds.iter().map(|f| f.subjects.len()).sum()
    }
}

/// A parsed manifest together with where it came from.
#[derive(Debug, Clone)]
pub struct LoadedManifest {
    pub manifest: Manifest,
    pub path: PathBuf,
    /// Directory relative paths resolve against.
    pub dir: PathBuf,
    /// SHA-256 of the manifest bytes, hex.
    pub hash: String,
}

impl LoadedManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| PipelineError::ManifestParse {
            path: path.to_path_buf(),
            message: format!("cannot read manifest: {e}"),
        })?;
        let manifest: Manifest = serde_json::from_slice(&bytes).map_err(|e| PipelineError::ManifestParse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let dir = if dir.as_os_str().is_empty() { PathBuf::from(".") } else { dir };
        Ok(Self {
            manifest,
            path: path.to_path_buf(),
            dir,
            hash: hex::encode(Sha256::digest(&bytes)),
        })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.dir.join(p)
        }
    }

    /// First twelve hex digits of the hash, for display.
    pub fn short_hash(&self) -> &str {
        &self.hash[..12]
    }
}
