//! TOML experiment configuration and its resolution into a run plan.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use imubench_nn::{ModelSpec, Reduction, Variant};
use serde::{Deserialize, Serialize};

use super::technique::TechniqueId;
use crate::error::{Error, Result};
use crate::ingest::{DatasetKind, WindowConfig};
use crate::training::TrainConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self { test_fraction: 0.2, seed: 42 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReductionConfig {
    LastStep,
    MeanPool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub filters: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pool: usize,
    pub hidden: usize,
    pub fc_width: usize,
    pub dropout: f64,
    pub reduction: ReductionConfig,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let s = ModelSpec::new(Variant::Baseline, 2);
        Self {
            filters: s.filters,
            kernel: s.kernel,
            stride: s.stride,
            pool: s.pool,
            hidden: s.hidden,
            fc_width: s.fc_width,
            dropout: s.dropout,
            reduction: ReductionConfig::LastStep,
        }
    }
}

impl ModelConfig {
    pub fn spec(&self, variant: Variant, classes: usize) -> ModelSpec {
        ModelSpec {
            filters: self.filters,
            kernel: self.kernel,
            stride: self.stride,
            pool: self.pool,
            hidden: self.hidden,
            fc_width: self.fc_width,
            dropout: self.dropout,
            reduction: match self.reduction {
                ReductionConfig::LastStep => Reduction::LastStep,
                ReductionConfig::MeanPool => Reduction::MeanPool,
            },
            ..ModelSpec::new(variant, classes)
        }
    }
}

/// Optimiser settings; epochs and seed come from the dataset and run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub batch: usize,
    pub eval_every: usize,
}

impl Default for OptimConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self { lr: t.lr, beta1: t.beta1, beta2: t.beta2, eps: t.eps, batch: t.batch, eval_every: t.eval_every }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    /// Noise σ per channel as a fraction of the training-set std.
    pub noise_fraction: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self { noise_fraction: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub root: PathBuf,
    pub window_len: Option<usize>,
    pub stride: Option<usize>,
    pub epochs: Option<usize>,
    pub noise_fraction: Option<f64>,
    /// Train and test on a seeded subset of subjects.
    pub subject_fraction: Option<f64>,
    /// Binary stream cache; written on first load, read afterwards.
    pub cache: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_techniques")]
    pub techniques: Vec<TechniqueId>,
    /// Reserved for combined techniques; must be empty.
    #[serde(default)]
    pub combination: Vec<TechniqueId>,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub train: OptimConfig,
    #[serde(default)]
    pub augment: AugmentConfig,
    pub datasets: BTreeMap<String, DatasetConfig>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_techniques() -> Vec<TechniqueId> {
    TechniqueId::ALL.to_vec()
}

pub fn default_epochs(kind: DatasetKind) -> usize {
    match kind {
        DatasetKind::UciHar => 50,
        _ => 30,
    }
}

/// Everything needed to run one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetPlan {
    pub kind: DatasetKind,
    pub root: PathBuf,
    pub window: WindowConfig,
    pub epochs: usize,
    pub noise_fraction: f64,
    pub subject_fraction: f64,
    pub cache: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub output_dir: PathBuf,
    pub seeds: Vec<u64>,
    /// Baseline first, then the requested techniques in canonical order.
    pub techniques: Vec<TechniqueId>,
    pub datasets: Vec<DatasetPlan>,
    pub split: SplitConfig,
    pub model: ModelConfig,
    pub train: OptimConfig,
}

/// Restricts a plan to one dataset, technique or seed (CLI overrides).
#[derive(Debug, Clone, Default)]
pub struct PlanFilter {
    pub dataset: Option<DatasetKind>,
    pub technique: Option<TechniqueId>,
    pub seed: Option<u64>,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Validates the config and resolves relative paths against `base`.
    pub fn plan(&self, base: &Path, filter: &PlanFilter) -> Result<ExperimentPlan> {
        if !self.combination.is_empty() {
            return Err(Error::Config("technique combinations are not supported".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if self.datasets.is_empty() {
            return Err(Error::Config("no datasets configured".into()));
        }
        if !(self.split.test_fraction > 0.0 && self.split.test_fraction < 1.0) {
            return Err(Error::Config(format!("split.test_fraction {} outside (0, 1)", self.split.test_fraction)));
        }
        let probe = TrainConfig {
            lr: self.train.lr,
            beta1: self.train.beta1,
            beta2: self.train.beta2,
            eps: self.train.eps,
            batch: self.train.batch,
            eval_every: self.train.eval_every,
            ..Default::default()
        };
        probe.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.model.spec(Variant::Baseline, 2).validate().map_err(|e| Error::Config(e.to_string()))?;

        let mut datasets = Vec::new();
        for (name, d) in &self.datasets {
            let kind: DatasetKind = name.parse().map_err(|_| Error::Config(format!("unknown dataset '{name}'")))?;
            if filter.dataset.is_some_and(|k| k != kind) {
                continue;
            }
            if datasets.iter().any(|p: &DatasetPlan| p.kind == kind) {
                return Err(Error::Config(format!("dataset '{name}' configured twice")));
            }
            let len = d.window_len.unwrap_or_else(|| kind.default_window_len());
            let stride = d.stride.unwrap_or(len);
            let epochs = d.epochs.unwrap_or_else(|| default_epochs(kind));
            let noise_fraction = d.noise_fraction.unwrap_or(self.augment.noise_fraction);
            let subject_fraction = d.subject_fraction.unwrap_or(1.0);
            if len == 0 || stride == 0 || epochs == 0 {
                return Err(Error::Config(format!("{name}: window_len, stride and epochs must be positive")));
            }
            if len < self.model.spec(Variant::Baseline, 2).min_window_len() {
                return Err(Error::Config(format!("{name}: window_len {len} too short for the model")));
            }
            if !(noise_fraction > 0.0 && noise_fraction.is_finite()) {
                return Err(Error::Config(format!("{name}: noise_fraction must be positive")));
            }
            if !(subject_fraction > 0.0 && subject_fraction <= 1.0) {
                return Err(Error::Config(format!("{name}: subject_fraction must lie in (0, 1]")));
            }
            datasets.push(DatasetPlan {
                kind,
                root: resolve(base, &d.root),
                window: WindowConfig { len, stride },
                epochs,
                noise_fraction,
                subject_fraction,
                cache: d.cache.as_ref().map(|c| resolve(base, c)),
            });
        }
        if datasets.is_empty() {
            return Err(Error::Config("dataset filter matches no configured dataset".into()));
        }
        datasets.sort_by_key(|d| d.kind);

        let mut techniques: Vec<TechniqueId> = match filter.technique {
            Some(t) => vec![t],
            None => self.techniques.clone(),
        };
        techniques.push(TechniqueId::Baseline);
        techniques.sort();
        techniques.dedup();

        let seeds = match filter.seed {
            Some(s) => vec![s],
            None => self.seeds.clone(),
        };

        Ok(ExperimentPlan {
            output_dir: resolve(base, &self.output_dir),
            seeds,
            techniques,
            datasets,
            split: self.split.clone(),
            model: self.model.clone(),
            train: self.train.clone(),
        })
    }
}

impl ExperimentPlan {
    pub fn train_config(&self, dataset: &DatasetPlan, seed: u64) -> TrainConfig {
        TrainConfig {
            lr: self.train.lr,
            beta1: self.train.beta1,
            beta2: self.train.beta2,
            eps: self.train.eps,
            batch: self.train.batch,
            eval_every: self.train.eval_every,
            epochs: dataset.epochs,
            seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [datasets.motion_sense]
        root = "data/motionsense"
    "#;

    #[test]
    fn defaults_fill_in() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        let plan = cfg.plan(Path::new("/base"), &PlanFilter::default()).unwrap();
        assert_eq!(plan.techniques, TechniqueId::ALL.to_vec());
        assert_eq!(plan.seeds, vec![0]);
        assert_eq!(plan.output_dir, PathBuf::from("/base/results"));
        let d = &plan.datasets[0];
        assert_eq!(d.kind, DatasetKind::MotionSense);
        assert_eq!(d.root, PathBuf::from("/base/data/motionsense"));
        assert_eq!(d.window, WindowConfig { len: 100, stride: 100 });
        assert_eq!((d.epochs, d.noise_fraction, d.subject_fraction), (30, 0.05, 1.0));
        assert_eq!(plan.train.batch, 64);
        assert_eq!(plan.train.lr, 1e-3);
        assert_eq!(plan.split, SplitConfig { test_fraction: 0.2, seed: 42 });
        assert_eq!(plan.model.spec(Variant::Head2, 6), ModelSpec::new(Variant::Head2, 6));
    }

    #[test]
    fn filter_keeps_baseline_first() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        let filter = PlanFilter { technique: Some(TechniqueId::Noise), seed: Some(9), ..Default::default() };
        let plan = cfg.plan(Path::new("."), &filter).unwrap();
        assert_eq!(plan.techniques, vec![TechniqueId::Baseline, TechniqueId::Noise]);
        assert_eq!(plan.seeds, vec![9]);
        let other = PlanFilter { dataset: Some(DatasetKind::Ridi), ..Default::default() };
        assert!(matches!(cfg.plan(Path::new("."), &other), Err(Error::Config(_))));
    }

    #[test]
    fn invalid_configs_are_config_errors() {
        let bad = [
            "seeds = []\n[datasets.ridi]\nroot='x'",
            "techniques = ['ma7']\n[datasets.ridi]\nroot='x'",
            "combination = ['noise', 'ma10']\n[datasets.ridi]\nroot='x'",
            "[datasets.kitti]\nroot='x'",
            "[datasets.ridi]\nroot='x'\nwindow_len = 5",
            "[datasets.ridi]\nroot='x'\nsubject_fraction = 0.0",
            "[train]\nbatch = 0\n[datasets.ridi]\nroot='x'",
            "[split]\ntest_fraction = 1.0\n[datasets.ridi]\nroot='x'",
            "[datasets.ridi]\nroot='x'\nunknown_key = 1",
            "output_dir = 'x'",
        ];
        for text in bad {
            let r = ExperimentConfig::from_toml(text).and_then(|c| c.plan(Path::new("."), &PlanFilter::default()));
            assert!(matches!(r, Err(Error::Config(_))), "accepted: {text}");
        }
    }
}
