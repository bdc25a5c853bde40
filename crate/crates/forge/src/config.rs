//! Run configuration: one TOML file mirroring the core specs, with command
//! line flags layered on top. The resolved result is written next to every
//! run's outputs.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use illusion_forge_core::analysis::PERMUTATIONS;
use illusion_forge_core::dataset::{nine_bin_centers, DatasetSpec, MixPlan};
use illusion_forge_core::fusion::{FusionMode, Strategy};
use illusion_forge_core::toy::ToyTask;
use illusion_forge_core::trainer::{Activation, MlpConfig};
use serde::{Deserialize, Serialize};

use crate::preprocess::PreprocSpec;

pub const RESOLVED_CONFIG_FILE: &str = "config.resolved.toml";

/// Input sides the trainer accepts. 224 is the native render size.
pub const RESOLUTIONS: [u32; 3] = [224, 56, 32];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Dataset directory read by train, eval and fit.
    pub data: Option<PathBuf>,
    pub out: PathBuf,
    /// Worker threads; 0 means one per core.
    pub jobs: usize,
    pub dataset: DatasetSpec,
    pub target: TargetConfig,
    pub mix: MixPlan,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub fit: FitConfig,
    pub sweep: SweepConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: None,
            out: PathBuf::from("out"),
            jobs: 0,
            dataset: DatasetSpec::default(),
            target: TargetConfig::default(),
            mix: MixPlan::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            fit: FitConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

/// Object-recognition data for the fusion modes. Either a folder-per-class
/// image directory or a generated toy task; neither means illusion-only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TargetConfig {
    pub root: Option<PathBuf>,
    pub toy: Option<ToyTask>,
    /// Images per class when generating a toy task.
    pub per_class: usize,
    pub seed: u64,
    pub train_fraction: f64,
}

impl Default for TargetConfig {
    fn default() -> Self {
        Self { root: None, toy: None, per_class: 100, seed: 0, train_fraction: 0.8 }
    }
}

impl TargetConfig {
    pub fn is_empty(&self) -> bool {
        self.root.is_none() && self.toy.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub base_lr: f64,
    pub max_lr: f64,
    pub cycle_steps: Option<usize>,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Side of the square trainer input, one of [`RESOLUTIONS`].
    pub resolution: u32,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let m = MlpConfig::new(1, vec![128, 64], FusionMode::new(Strategy::Base, 2));
        Self {
            hidden: m.hidden,
            activation: m.activation,
            base_lr: m.base_lr,
            max_lr: m.max_lr,
            cycle_steps: m.cycle_steps,
            momentum: m.momentum,
            batch_size: m.batch_size,
            epochs: m.epochs,
            resolution: 56,
        }
    }
}

impl ModelConfig {
    pub fn preproc(&self) -> PreprocSpec {
        PreprocSpec { size: self.resolution }
    }

    pub fn mlp(&self, mode: FusionMode, seed: u64) -> MlpConfig {
        MlpConfig {
            input_dim: self.preproc().dim(),
            hidden: self.hidden.clone(),
            activation: self.activation,
            mode,
            base_lr: self.base_lr,
            max_lr: self.max_lr,
            cycle_steps: self.cycle_steps,
            momentum: self.momentum,
            batch_size: self.batch_size,
            epochs: self.epochs,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub mode: Strategy,
    /// First seed; runs use `seed, seed + 1, ...`.
    pub seed: u64,
    pub seeds: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { mode: Strategy::Base, seed: 0, seeds: 1 }
    }
}

impl TrainConfig {
    pub fn seed_list(&self) -> Vec<u64> {
        (0..self.seeds as u64).map(|i| self.seed + i).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Strength,
    PerceptionDiff,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Strength => "strength",
            Axis::PerceptionDiff => "perception_diff",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "strength" | "s" => Some(Axis::Strength),
            "perception_diff" | "diff" | "d" => Some(Axis::PerceptionDiff),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    pub x: Axis,
    pub degree: usize,
    pub permutations: usize,
    pub confidence: f64,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self { x: Axis::Strength, degree: 2, permutations: PERMUTATIONS, confidence: 0.95, seed: 0 }
    }
}

/// Per-bin training for the accuracy-versus-parameter study. The swept
/// axis is `fit.x`; the other parameter keeps its `dataset` range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub bins: Vec<f64>,
    pub pairs_per_family: u32,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { bins: nine_bin_centers(), pairs_per_family: 40 }
    }
}

/// Values given on the command line; `None` leaves the file's value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub seed: Option<u64>,
    pub seeds: Option<usize>,
    pub mode: Option<Strategy>,
    pub families: Option<Vec<illusion_forge_core::illusions::IllusionFamily>>,
    pub pairs: Option<u32>,
    pub strength: Option<(f64, f64)>,
    pub diff: Option<(f64, f64)>,
    pub bins: Option<usize>,
    pub resolution: Option<u32>,
    pub x: Option<Axis>,
    pub degree: Option<usize>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Writes the resolved configuration into `dir`.
    pub fn persist(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(RESOLVED_CONFIG_FILE);
        std::fs::write(&path, self.to_toml()).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = &o.out {
            self.out = v.clone();
        }
        if let Some(v) = &o.data {
            self.data = Some(v.clone());
        }
        if let Some(v) = o.jobs {
            self.jobs = v;
        }
        if let Some(v) = o.seed {
            self.dataset.master_seed = v;
            self.train.seed = v;
        }
        if let Some(v) = o.seeds {
            self.train.seeds = v;
        }
        if let Some(v) = o.mode {
            self.train.mode = v;
        }
        if let Some(v) = &o.families {
            self.dataset.families = v.clone();
        }
        if let Some(v) = o.pairs {
            self.dataset.pairs_per_family = v;
        }
        if let Some((lo, hi)) = o.strength {
            self.dataset.strength = illusion_forge_core::dataset::StrengthSampling::Uniform { lo, hi };
        }
        if let Some((lo, hi)) = o.diff {
            self.dataset.diff_lo = lo;
            self.dataset.diff_hi = hi;
        }
        if let Some(k) = o.bins {
            // k evenly spaced interior points; k = 9 gives 0.1, ..., 0.9.
            let values: Vec<f64> = (1..=k).map(|i| i as f64 / (k + 1) as f64).collect();
            self.dataset.strength = illusion_forge_core::dataset::StrengthSampling::Bins { values: values.clone() };
            self.sweep.bins = values;
        }
        if let Some(v) = o.resolution {
            self.model.resolution = v;
        }
        if let Some(v) = o.x {
            self.fit.x = v;
        }
        if let Some(v) = o.degree {
            self.fit.degree = v;
        }
    }

    /// Checks everything that can be checked without touching the disk.
    pub fn validate(&self) -> Result<()> {
        self.dataset.validate()?;
        if !RESOLUTIONS.contains(&self.model.resolution) {
            bail!("resolution must be one of {RESOLUTIONS:?}, got {}", self.model.resolution);
        }
        if self.train.seeds == 0 {
            bail!("seeds must be at least 1");
        }
        if self.target.root.is_some() && self.target.toy.is_some() {
            bail!("target.root and target.toy are mutually exclusive");
        }
        if self.fit.degree == 0 {
            bail!("fit degree must be at least 1");
        }
        if !(self.fit.confidence > 0.0 && self.fit.confidence < 1.0) {
            bail!("fit confidence must lie in (0, 1)");
        }
        if self.sweep.bins.is_empty() || !self.sweep.bins.iter().all(|b| (0.0..=1.0).contains(b)) {
            bail!("sweep bins must be non-empty and inside [0, 1]");
        }
        self.model.mlp(FusionMode::new(self.train.mode, 2), 0).validate()?;
        Ok(())
    }
}
