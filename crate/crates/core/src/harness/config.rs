//! Experiment configuration: a JSON-serializable document that fully
//! determines a run together with the dataset.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::OptimizerKind;

/// Prediction task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    /// Coulomb-matrix molecules, threshold-partitioned views, GINE stacks.
    Molecule,
    /// Point clouds, radius-partitioned views, EGNN stacks.
    Pointcloud,
    /// Linear graph filters on a planted shift-operator pair.
    PlantedFilter,
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Molecule => "molecule",
            Task::Pointcloud => "pointcloud",
            Task::PlantedFilter => "planted-filter",
        }
    }
}

/// Single parent graph versus the multi-view tuple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    SingleGraph,
    GraphTuple,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::SingleGraph => "single-graph",
            ModelKind::GraphTuple => "graph-tuple",
        }
    }
}

/// Training loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    L1,
    Mse,
}

/// Reduce-on-plateau settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchedulerConfig {
    pub factor: f64,
    pub patience: u32,
    pub floor: f64,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        Self {
            factor: 0.8,
            patience: 5,
            floor: 1e-5,
        }
    }
}

/// Full experiment description; `(config, seed, dataset)` determines the
/// report byte-for-byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: Task,
    pub model: ModelKind,
    /// Interaction threshold splitting strong/weak views (molecule task).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    /// Connection radii `(c1, c2)` (pointcloud task).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<(f64, f64)>,
    /// When set (the default), requires `c2 = 2·c1`.
    #[serde(default = "default_true")]
    pub tie_radii: bool,
    pub hidden: usize,
    pub layers: usize,
    pub optimizer: OptimizerKind,
    pub lr: f64,
    pub weight_decay: f64,
    #[serde(default)]
    pub scheduler: SchedulerConfig,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Early-stop patience in epochs; `None` trains to the epoch cutoff.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub early_stop_patience: Option<usize>,
    /// Stop once the epoch training loss falls below this target
    /// (overfitting smoke runs).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_below_train: Option<f64>,
    pub loss: LossKind,
    /// Cross-validation folds (molecule task).
    pub folds: usize,
    /// Independent repeats with shifted seeds (pointcloud / planted tasks).
    pub seeds: usize,
    /// Polynomial degree of the filter classes (planted task).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter_degree: Option<usize>,
    pub seed: u64,
}

fn default_true() -> bool {
    true
}

impl ExperimentConfig {
    /// Molecule regression defaults: 2 GINE layers of width 100, L1
    /// loss, Adam, batch 128, stratified 10-fold with patience-20 early
    /// stopping.
    pub fn molecule_default() -> Self {
        Self {
            task: Task::Molecule,
            model: ModelKind::GraphTuple,
            threshold: Some(2.0),
            radii: None,
            tie_radii: true,
            hidden: 100,
            layers: 2,
            optimizer: OptimizerKind::Adam,
            lr: 5e-3,
            weight_decay: 1e-5,
            scheduler: SchedulerConfig::default(),
            batch_size: 128,
            max_epochs: 1000,
            early_stop_patience: Some(20),
            stop_below_train: None,
            loss: LossKind::L1,
            folds: 10,
            seeds: 1,
            filter_degree: None,
            seed: 42,
        }
    }

    /// Point-cloud regression defaults: 3 EGNN layers of width 96, MSE
    /// loss, AdamW, batch 8, ten repeats over a 60/20/20 split.
    pub fn pointcloud_default() -> Self {
        Self {
            task: Task::Pointcloud,
            model: ModelKind::GraphTuple,
            threshold: None,
            radii: Some((1.0, 2.0)),
            tie_radii: true,
            hidden: 96,
            layers: 3,
            optimizer: OptimizerKind::AdamW,
            lr: 5e-4,
            weight_decay: 1e-5,
            scheduler: SchedulerConfig {
                factor: 0.7,
                patience: 5,
                floor: 1e-5,
            },
            batch_size: 8,
            max_epochs: 300,
            early_stop_patience: None,
            stop_below_train: None,
            loss: LossKind::Mse,
            folds: 1,
            seeds: 10,
            filter_degree: None,
            seed: 42,
        }
    }

    /// Planted-filter defaults: linear filter classes of degree 2 fitted
    /// by Adam on MSE over five repeats.
    pub fn planted_default() -> Self {
        Self {
            task: Task::PlantedFilter,
            model: ModelKind::GraphTuple,
            threshold: None,
            radii: None,
            tie_radii: true,
            hidden: 1,
            layers: 1,
            optimizer: OptimizerKind::Adam,
            lr: 5e-2,
            weight_decay: 0.0,
            scheduler: SchedulerConfig::default(),
            batch_size: 32,
            max_epochs: 300,
            early_stop_patience: Some(40),
            stop_below_train: None,
            loss: LossKind::Mse,
            folds: 1,
            seeds: 5,
            filter_degree: Some(2),
            seed: 42,
        }
    }

    pub fn default_for(task: Task) -> Self {
        match task {
            Task::Molecule => Self::molecule_default(),
            Task::Pointcloud => Self::pointcloud_default(),
            Task::PlantedFilter => Self::planted_default(),
        }
    }

    /// Checks internal consistency; every entry point calls this first.
    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 || self.layers == 0 {
            return Err(Error::Config("hidden width and layer count must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::Config(format!("learning rate must be > 0, got {}", self.lr)));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return Err(Error::Config(format!(
                "weight decay must be >= 0, got {}",
                self.weight_decay
            )));
        }
        if !(self.scheduler.factor > 0.0 && self.scheduler.factor < 1.0) {
            return Err(Error::Config(format!(
                "scheduler factor must lie in (0, 1), got {}",
                self.scheduler.factor
            )));
        }
        match self.task {
            Task::Molecule => {
                if self.threshold.is_none() {
                    return Err(Error::Config("molecule task requires `threshold`".into()));
                }
                if self.folds < 2 {
                    return Err(Error::Config(format!(
                        "molecule task needs >= 2 folds, got {}",
                        self.folds
                    )));
                }
            }
            Task::Pointcloud => {
                let (c1, c2) = self
                    .radii
                    .ok_or_else(|| Error::Config("pointcloud task requires `radii`".into()))?;
                if !(c1 > 0.0 && c2 > c1) {
                    return Err(Error::Config(format!(
                        "radii must satisfy 0 < c1 < c2, got ({c1}, {c2})"
                    )));
                }
                if self.tie_radii && (c2 - 2.0 * c1).abs() > 1e-9 * c2.abs() {
                    return Err(Error::Config(format!(
                        "tied radii require c2 = 2*c1, got ({c1}, {c2})"
                    )));
                }
                if self.seeds == 0 {
                    return Err(Error::Config("pointcloud task needs >= 1 seed repeat".into()));
                }
            }
            Task::PlantedFilter => {
                if self.filter_degree.is_none() {
                    return Err(Error::Config("planted-filter task requires `filter_degree`".into()));
                }
                if self.seeds == 0 {
                    return Err(Error::Config("planted-filter task needs >= 1 seed repeat".into()));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ExperimentConfig::molecule_default().validate().unwrap();
        ExperimentConfig::pointcloud_default().validate().unwrap();
        ExperimentConfig::planted_default().validate().unwrap();
    }

    #[test]
    fn json_round_trip() {
        let cfg = ExperimentConfig::pointcloud_default();
        let s = serde_json::to_string_pretty(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(back, cfg);
        assert!(s.contains("\"pointcloud\""));
        assert!(s.contains("\"graph-tuple\""));
    }

    #[test]
    fn untied_radii_rejected_when_tied() {
        let mut cfg = ExperimentConfig::pointcloud_default();
        cfg.radii = Some((1.0, 2.5));
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        cfg.tie_radii = false;
        cfg.validate().unwrap();
    }

    #[test]
    fn missing_task_fields_rejected() {
        let mut cfg = ExperimentConfig::molecule_default();
        cfg.threshold = None;
        assert!(cfg.validate().is_err());

        let mut cfg = ExperimentConfig::planted_default();
        cfg.filter_degree = None;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn unknown_config_fields_rejected() {
        let s = r#"{"task":"molecule","model":"graph-tuple","typo_field":1}"#;
        assert!(serde_json::from_str::<ExperimentConfig>(s).is_err());
    }
}
