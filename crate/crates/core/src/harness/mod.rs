//! Experiment harness: configuration, synthetic data, dataset files,
//! deterministic training with cross-validation, metrics, and reports.

mod config;
mod data;
mod folds;
mod io;
mod metrics;
mod model;
mod run;
mod train;

pub use config::{ExperimentConfig, LossKind, ModelKind, SchedulerConfig, Task};
pub use data::{
    cloud_targets, combine_matrices, generate_planted_filter_dataset, generate_synthetic_clouds,
    generate_synthetic_molecules, molecule_targets, PlantedMeta, Sample, ATOM_CHARGES, CLOUD_BOX,
    CLOUD_TARGETS, MIN_ATOM_DIST, MOLECULE_TARGETS,
};
pub use folds::{split_60_20_20, stratified_kfold, FoldSplit};
pub use io::{
    load_dataset, load_planted_meta, meta_path, metrics_csv, planted_csv, save_dataset,
    save_json, save_planted_meta, save_text,
};
pub use metrics::{mae, mean_and_se, mse, r_squared};
pub use model::{
    CloudModel, EgnnStack, FilterModel, GineStack, GraphModel, MoleculeModel, PreparedViews,
    RBF_DIM,
};
pub use run::{
    derive_seed, run_experiment, run_planted_experiment, FoldMetrics, MetricsReport,
    PlantedReport, PlantedRun, SummaryStats,
};
pub use train::{eval_loss, predict_all, stack_targets, train_model, TrainOutcome};
