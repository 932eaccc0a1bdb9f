//! Pipeline configuration and file layout.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use jumpcast_core::dataset::DatasetConfig;
use jumpcast_core::features::FeatureConfig;
use jumpcast_core::models::{Architecture, OutputMode, TrainConfig};
use jumpcast_core::{DetectorConfig, ScenarioConfig, SplitPlan};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub architecture: Architecture,
    pub output: OutputMode,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { architecture: Architecture::CnnLstmA, output: OutputMode::Binary }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    /// Coin-flip classifiers averaged for the random baseline.
    pub baseline_trials: usize,
    /// Features listed in the attention report.
    pub attention_top: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { baseline_trials: 1000, attention_top: 10 }
    }
}

/// Artifact locations relative to the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    pub events: PathBuf,
    pub truth: PathBuf,
    pub snapshots: PathBuf,
    pub labels: PathBuf,
    pub features: PathBuf,
    pub dataset: PathBuf,
    pub checkpoints: PathBuf,
    pub reports: PathBuf,
    pub manifests: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            events: "events".into(),
            truth: "truth.csv".into(),
            snapshots: "snapshots".into(),
            labels: "labels.csv".into(),
            features: "features".into(),
            dataset: "dataset.bin".into(),
            checkpoints: "checkpoints".into(),
            reports: "reports".into(),
            manifests: "manifests".into(),
        }
    }
}

/// Everything a run needs. The session length comes from the scenario; the
/// detector's observations per day and the feature session length follow it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub seed: u64,
    pub stock: String,
    pub scenario: ScenarioConfig,
    pub detector: DetectorConfig,
    pub features: FeatureConfig,
    pub dataset: DatasetConfig,
    pub split: SplitPlan,
    pub train: TrainConfig,
    pub model: ModelConfig,
    pub eval: EvalConfig,
    pub paths: Paths,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self::preset("demo").expect("demo preset exists")
    }
}

impl PipelineConfig {
    /// Named profiles: `demo`, `nosignal` and `tiny`.
    pub fn preset(name: &str) -> Option<Self> {
        let scenario = ScenarioConfig::preset(name)?;
        let mut c = Self {
            seed: 0,
            stock: "SYN".into(),
            scenario,
            detector: DetectorConfig::default(),
            features: FeatureConfig::default(),
            dataset: DatasetConfig::default(),
            split: SplitPlan::default(),
            train: TrainConfig { epochs: 30, patience: 5, ..Default::default() },
            model: ModelConfig::default(),
            eval: EvalConfig::default(),
            paths: Paths::default(),
        };
        if name == "tiny" {
            // Three one-hour days: one day of detector warm-up, half-hour
            // windows, train on the second day and test on the third.
            c.detector.window = 60;
            c.dataset.steps = 30;
            c.split = SplitPlan { train_block_days: 1, test_days: 1, n_sets: 1, skip_days: 1, ..Default::default() };
            c.train = TrainConfig { epochs: 2, batch_size: 16, patience: 2, curriculum_days: None, ..Default::default() };
            c.eval.baseline_trials = 100;
        }
        Some(c.resolved())
    }

    /// Copies the shared settings (seed, session length) into every section.
    pub fn resolved(mut self) -> Self {
        self.scenario.seed = self.seed;
        self.dataset.seed = self.seed;
        self.split.seed = self.seed;
        self.train.seed = self.seed;
        self.detector.obs_per_day = self.minutes_per_day();
        self.features.seconds_per_day = self.scenario.seconds_per_day;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.resolved()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let c: Self = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        Ok(c.resolved())
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// SHA-256 of the textual config, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }

    pub fn minutes_per_day(&self) -> usize {
        self.scenario.minutes_per_day()
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.detector.validate()?;
        self.dataset.validate()?;
        self.train.validate()?;
        if self.dataset.step_seconds != 60 {
            bail!("dataset.step_seconds must be 60 so windows sit on the minute grid");
        }
        if self.stock.is_empty() || self.stock.contains(',') {
            bail!("stock name {:?} must be non-empty and free of commas", self.stock);
        }
        Ok(())
    }
}
