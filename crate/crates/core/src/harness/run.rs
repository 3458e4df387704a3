//! Experiment orchestration: cross-validated or seed-repeated training
//! runs and their deterministic reports.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;
use crate::theory::FilterClass;

use super::config::{ExperimentConfig, Task};
use super::data::{PlantedMeta, Sample};
use super::folds::{split_60_20_20, stratified_kfold, FoldSplit};
use super::metrics::{mae, mean_and_se, mse, r_squared};
use super::model::{CloudModel, FilterModel, GraphModel, MoleculeModel};
use super::train::{predict_all, stack_targets, train_model, TrainOutcome};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Mixes a run index into the master seed.
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    seed.wrapping_add(salt.wrapping_mul(GOLDEN))
}

/// Test metrics of one fold (molecule task) or one seed repeat
/// (pointcloud task).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub seed: u64,
    /// Per-target metrics on the held-out test set.
    pub mae: Vec<f64>,
    pub mse: Vec<f64>,
    /// Absent when undefined (singleton or constant-target test sets).
    pub r2: Option<Vec<f64>>,
    pub best_epoch: usize,
    pub final_epoch: usize,
    pub untrained: bool,
    pub train_curve: Vec<f64>,
    pub val_curve: Vec<f64>,
}

/// Per-target means and standard errors over folds; standard errors
/// require at least two folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub mae_mean: Vec<f64>,
    pub mae_se: Option<Vec<f64>>,
    pub mse_mean: Vec<f64>,
    pub mse_se: Option<Vec<f64>>,
    pub r2_mean: Option<Vec<f64>>,
    pub r2_se: Option<Vec<f64>>,
}

/// Full result of a molecule or pointcloud experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub config: ExperimentConfig,
    pub n_samples: usize,
    pub folds: Vec<FoldMetrics>,
    pub summary: SummaryStats,
}

fn check_samples(samples: &[Sample]) -> Result<usize> {
    if samples.is_empty() {
        return Err(Error::Config("dataset is empty".into()));
    }
    let t = samples[0].targets.len();
    for (i, s) in samples.iter().enumerate() {
        s.validate(i + 1)?;
        if s.targets.len() != t {
            return Err(Error::Schema {
                line: i + 1,
                msg: format!("record has {} targets, expected {t}", s.targets.len()),
            });
        }
    }
    Ok(t)
}

fn run_split<M: GraphModel>(
    model: &mut M,
    preps: &[M::Prep],
    targets: &[Tensor],
    split: &FoldSplit,
    cfg: &ExperimentConfig,
    fold: usize,
    run_seed: u64,
) -> Result<FoldMetrics> {
    let outcome = train_model(
        model,
        preps,
        targets,
        &split.train,
        &split.val,
        cfg,
        derive_seed(run_seed, 0xA5),
    )?;
    let pred = predict_all(model, preps, &split.test)?;
    let y = stack_targets(targets, &split.test)?;
    Ok(FoldMetrics {
        fold,
        seed: run_seed,
        mae: mae(&pred, &y)?,
        mse: mse(&pred, &y)?,
        r2: r_squared(&pred, &y).ok(),
        best_epoch: outcome.best_epoch,
        final_epoch: outcome.final_epoch,
        untrained: outcome.untrained,
        train_curve: outcome.train_curve,
        val_curve: outcome.val_curve,
    })
}

fn summarize(folds: &[FoldMetrics]) -> SummaryStats {
    let t = folds[0].mae.len();
    let many = folds.len() >= 2;
    let mut mae_mean = Vec::with_capacity(t);
    let mut mae_se = Vec::with_capacity(t);
    let mut mse_mean = Vec::with_capacity(t);
    let mut mse_se = Vec::with_capacity(t);
    for j in 0..t {
        let vals: Vec<f64> = folds.iter().map(|f| f.mae[j]).collect();
        let (m, se) = mean_and_se(&vals);
        mae_mean.push(m);
        mae_se.push(se.unwrap_or(0.0));
        let vals: Vec<f64> = folds.iter().map(|f| f.mse[j]).collect();
        let (m, se) = mean_and_se(&vals);
        mse_mean.push(m);
        mse_se.push(se.unwrap_or(0.0));
    }
    let (r2_mean, r2_se) = if folds.iter().all(|f| f.r2.is_some()) {
        let mut means = Vec::with_capacity(t);
        let mut ses = Vec::with_capacity(t);
        for j in 0..t {
            let vals: Vec<f64> = folds
                .iter()
                .map(|f| f.r2.as_ref().expect("checked")[j])
                .collect();
            let (m, se) = mean_and_se(&vals);
            means.push(m);
            ses.push(se.unwrap_or(0.0));
        }
        (Some(means), if many { Some(ses) } else { None })
    } else {
        (None, None)
    };
    SummaryStats {
        mae_mean,
        mae_se: if many { Some(mae_se) } else { None },
        mse_mean,
        mse_se: if many { Some(mse_se) } else { None },
        r2_mean,
        r2_se,
    }
}

/// Runs the configured experiment: stratified k-fold for the molecule
/// task, repeated 60/20/20 splits for the pointcloud task. The
/// planted-filter task carries ground truth and goes through
/// [`run_planted_experiment`].
pub fn run_experiment(cfg: &ExperimentConfig, samples: &[Sample]) -> Result<MetricsReport> {
    cfg.validate()?;
    let t = check_samples(samples)?;
    let folds = match cfg.task {
        Task::Molecule => {
            let mut proto_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 0));
            let proto = MoleculeModel::new(cfg, t, &mut proto_rng)?;
            let preps: Vec<_> = samples
                .iter()
                .map(|s| proto.prepare(s))
                .collect::<Result<Vec<_>>>()?;
            let targets: Vec<Tensor> = samples.iter().map(Sample::target_row).collect();
            let first: Vec<f64> = samples.iter().map(|s| s.targets[0]).collect();
            let splits = stratified_kfold(&first, cfg.folds, 10, cfg.seed)?;
            let mut folds = Vec::with_capacity(splits.len());
            for (f, split) in splits.iter().enumerate() {
                let run_seed = derive_seed(cfg.seed, f as u64 + 1);
                let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
                let mut model = MoleculeModel::new(cfg, t, &mut rng)?;
                folds.push(run_split(&mut model, &preps, &targets, split, cfg, f, run_seed)?);
            }
            folds
        }
        Task::Pointcloud => {
            let mut proto_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 0));
            let proto = CloudModel::new(cfg, t, &mut proto_rng)?;
            let preps: Vec<_> = samples
                .iter()
                .map(|s| proto.prepare(s))
                .collect::<Result<Vec<_>>>()?;
            let targets: Vec<Tensor> = samples.iter().map(Sample::target_row).collect();
            let mut folds = Vec::with_capacity(cfg.seeds);
            for r in 0..cfg.seeds {
                let run_seed = derive_seed(cfg.seed, r as u64 + 1);
                let split = split_60_20_20(samples.len(), derive_seed(run_seed, 0x51))?;
                let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
                let mut model = CloudModel::new(cfg, t, &mut rng)?;
                folds.push(run_split(&mut model, &preps, &targets, &split, cfg, r, run_seed)?);
            }
            folds
        }
        Task::PlantedFilter => {
            return Err(Error::Config(
                "planted-filter experiments need the dataset's ground-truth metadata; \
                 call run_planted_experiment"
                    .into(),
            ))
        }
    };
    Ok(MetricsReport {
        config: cfg.clone(),
        n_samples: samples.len(),
        summary: summarize(&folds),
        folds,
    })
}

/// One repeat of the planted-filter comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedRun {
    pub rep: usize,
    pub seed: u64,
    pub outcome_tuple: TrainOutcome,
    pub outcome_tied: TrainOutcome,
    /// Test-set mean of the squared prediction error, summed over
    /// coordinates (the convention of the analytic risk).
    pub test_mse_tuple: f64,
    pub test_mse_tied: f64,
    /// `test_mse_tied - test_mse_tuple`.
    pub improvement: f64,
}

/// Result of the planted-filter comparison: a word-basis (graph-tuple)
/// filter versus the tied-coefficient dense-graph filter, against the
/// analytic oracle-risk gap recorded at generation time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedReport {
    pub config: ExperimentConfig,
    pub n_samples: usize,
    pub degree: usize,
    pub alpha: f64,
    pub noise_var: f64,
    /// Irreducible part of the risk, `n * noise_var`.
    pub noise_floor: f64,
    pub analytic_gap: f64,
    pub runs: Vec<PlantedRun>,
    pub mean_improvement: f64,
    pub improvement_se: Option<f64>,
    /// `mean_improvement / analytic_gap` when the gap is positive.
    pub gap_fraction: Option<f64>,
}

fn planted_test_metric(
    model: &FilterModel,
    preps: &[<FilterModel as GraphModel>::Prep],
    targets: &[Tensor],
    idx: &[usize],
) -> Result<f64> {
    let mut sum = 0.0;
    for &i in idx {
        let pred = model.forward(&preps[i])?;
        let diff = pred.sub(&targets[i])?;
        sum += diff.data().iter().map(|v| v * v).sum::<f64>();
    }
    Ok(sum / idx.len() as f64)
}

/// Trains the graph-tuple (word basis) and tied-coefficient filter
/// models on identical splits and compares their test risks with the
/// recorded analytic gap.
pub fn run_planted_experiment(
    cfg: &ExperimentConfig,
    samples: &[Sample],
    meta: &PlantedMeta,
) -> Result<PlantedReport> {
    cfg.validate()?;
    if cfg.task != Task::PlantedFilter {
        return Err(Error::Config(format!(
            "run_planted_experiment needs the planted-filter task, got {}",
            cfg.task.name()
        )));
    }
    let degree = cfg.filter_degree.expect("validated");
    if degree != meta.degree {
        return Err(Error::Config(format!(
            "config degree {degree} does not match the dataset's recorded degree {}",
            meta.degree
        )));
    }
    check_samples(samples)?;
    let n = meta.s.n();
    for (i, s) in samples.iter().enumerate() {
        let x = s.x.as_ref().ok_or_else(|| Error::Schema {
            line: i + 1,
            msg: "planted-filter record needs field `x`".into(),
        })?;
        if x.len() != n || s.targets.len() != n {
            return Err(Error::Schema {
                line: i + 1,
                msg: format!(
                    "record dimension {} / {} does not match the planted operator ({n})",
                    x.len(),
                    s.targets.len()
                ),
            });
        }
    }

    let tuple_proto = FilterModel::new(FilterClass::HGt, degree, &meta.s, &meta.sigma)?;
    let tied_proto = FilterModel::new(FilterClass::H0, degree, &meta.s, &meta.sigma)?;
    let preps_tuple: Vec<_> = samples
        .iter()
        .map(|s| tuple_proto.prepare(s))
        .collect::<Result<Vec<_>>>()?;
    let preps_tied: Vec<_> = samples
        .iter()
        .map(|s| tied_proto.prepare(s))
        .collect::<Result<Vec<_>>>()?;
    let targets: Vec<Tensor> = samples.iter().map(Sample::target_row).collect();

    let mut runs = Vec::with_capacity(cfg.seeds);
    for rep in 0..cfg.seeds {
        let run_seed = derive_seed(cfg.seed, rep as u64 + 1);
        let split = split_60_20_20(samples.len(), derive_seed(run_seed, 0x51))?;
        let mut tuple_model = tuple_proto.zero_grads();
        let mut tied_model = tied_proto.zero_grads();
        let outcome_tuple = train_model(
            &mut tuple_model,
            &preps_tuple,
            &targets,
            &split.train,
            &split.val,
            cfg,
            derive_seed(run_seed, 0xA5),
        )?;
        let outcome_tied = train_model(
            &mut tied_model,
            &preps_tied,
            &targets,
            &split.train,
            &split.val,
            cfg,
            derive_seed(run_seed, 0xA5),
        )?;
        let test_mse_tuple = planted_test_metric(&tuple_model, &preps_tuple, &targets, &split.test)?;
        let test_mse_tied = planted_test_metric(&tied_model, &preps_tied, &targets, &split.test)?;
        runs.push(PlantedRun {
            rep,
            seed: run_seed,
            outcome_tuple,
            outcome_tied,
            test_mse_tuple,
            test_mse_tied,
            improvement: test_mse_tied - test_mse_tuple,
        });
    }

    let improvements: Vec<f64> = runs.iter().map(|r| r.improvement).collect();
    let (mean_improvement, improvement_se) = mean_and_se(&improvements);
    Ok(PlantedReport {
        config: cfg.clone(),
        n_samples: samples.len(),
        degree,
        alpha: meta.alpha,
        noise_var: meta.noise_var,
        noise_floor: n as f64 * meta.noise_var,
        analytic_gap: meta.analytic_gap,
        runs,
        mean_improvement,
        improvement_se,
        gap_fraction: (meta.analytic_gap > 0.0).then(|| mean_improvement / meta.analytic_gap),
    })
}
