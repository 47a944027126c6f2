use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::query::{Method, NoiseSpec};
use crate::simlab::{LearnerConfig, SyntheticSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    /// Directory written by `gen-data` (or laid out the same way).
    Path(PathBuf),
    /// Generated in memory at run time.
    Synthetic(SyntheticSpec),
}

fn default_loops() -> usize {
    4
}

/// Annotation budget in patches.
///
/// `num_loops` counts query rounds after the starting budget, so a run
/// writes `num_loops + 1` manifests. `query_size` defaults to 20% of the
/// total and the starting budget to whatever the loops leave over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRegime {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub total_budget_patches: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub starting_budget: Option<usize>,
    #[serde(default = "default_loops")]
    pub num_loops: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResolvedBudget {
    pub starting_budget: usize,
    pub query_size: usize,
    pub num_loops: usize,
}

impl LabelRegime {
    pub fn resolve(&self) -> Result<ResolvedBudget> {
        let total = self.total_budget_patches;
        let query_size = self
            .query_size
            .unwrap_or_else(|| ((total as f64 * 0.2).round() as usize).max(1));
        let queried = query_size * self.num_loops;
        let starting_budget = match self.starting_budget {
            Some(s) => s,
            None => total.checked_sub(queried).ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "{} loops of {query_size} patches exceed the total budget {total}",
                    self.num_loops
                ))
            })?,
        };
        if starting_budget + queried != total {
            return Err(Error::InvalidConfig(format!(
                "starting budget {starting_budget} + {} x {query_size} != total {total}",
                self.num_loops
            )));
        }
        if starting_budget == 0 || (self.num_loops > 0 && query_size == 0) {
            return Err(Error::InvalidConfig("starting budget and query size must be >= 1".into()));
        }
        Ok(ResolvedBudget {
            starting_budget,
            query_size,
            num_loops: self.num_loops,
        })
    }

    pub fn label(&self) -> String {
        self.name
            .clone()
            .unwrap_or_else(|| format!("budget_{}", self.total_budget_patches))
    }
}

fn default_seeds() -> Vec<u64> {
    vec![0, 1, 2, 3]
}

fn yes() -> bool {
    true
}

/// Everything a run needs. Serialized into `results.json` as given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset_name: Option<String>,
    pub method: Method,
    pub label_regime: LabelRegime,
    pub patch_size: [usize; 3],
    /// Maximum overlap fraction allowed between a new patch and any other.
    #[serde(default)]
    pub overlap: f64,
    /// Overrides the method's default noise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSpec>,
    #[serde(default)]
    pub learner: LearnerConfig,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    /// Also train on the fully annotated pool for the FG-Eff reference Dice.
    #[serde(default = "yes")]
    pub full_reference: bool,
}

impl ExperimentConfig {
    /// Reads a JSON config. Relative paths are taken relative to the file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg: Self = serde_json::from_slice(&std::fs::read(path)?)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let DatasetSource::Path(p) = &mut cfg.dataset {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.label_regime.resolve()?;
        self.learner.validate()?;
        if self.patch_size.contains(&0) {
            return Err(Error::InvalidConfig(format!("patch size {:?}", self.patch_size)));
        }
        if !(0.0..=1.0).contains(&self.overlap) {
            return Err(Error::InvalidConfig(format!("overlap {} outside [0,1]", self.overlap)));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("no seeds".into()));
        }
        Ok(())
    }

    pub fn noise(&self) -> NoiseSpec {
        self.noise.unwrap_or_else(|| self.method.default_noise())
    }

    pub fn dataset_label(&self) -> String {
        if let Some(name) = &self.dataset_name {
            return name.clone();
        }
        match &self.dataset {
            DatasetSource::Path(p) => p
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| "dataset".into()),
            DatasetSource::Synthetic(_) => "synthetic".into(),
        }
    }
}
