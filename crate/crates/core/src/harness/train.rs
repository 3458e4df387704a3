//! Deterministic mini-batch training: shuffled batches, plateau
//! scheduling on the validation metric, strict-improvement early
//! stopping, and best-validation parameter restoration.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Optimizer, PlateauScheduler};
use crate::tensor::Tensor;

use super::config::{ExperimentConfig, LossKind};
use super::model::GraphModel;

/// What a training run did; the trained model has the best-validation
/// parameters restored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    /// Epoch (1-based) of the lowest validation metric; 0 if untrained.
    pub best_epoch: usize,
    pub final_epoch: usize,
    /// Lowest observed validation metric (the initial metric when
    /// untrained).
    pub best_val: f64,
    pub train_curve: Vec<f64>,
    pub val_curve: Vec<f64>,
    /// Set when `max_epochs = 0` left the model at initialization.
    pub untrained: bool,
}

/// Mean per-sample loss over `idx`.
pub fn eval_loss<M: GraphModel>(
    model: &M,
    preps: &[M::Prep],
    targets: &[Tensor],
    idx: &[usize],
    loss: LossKind,
) -> Result<f64> {
    if idx.is_empty() {
        return Err(Error::Domain("evaluation over an empty index set".into()));
    }
    let mut sum = 0.0;
    for &i in idx {
        let pred = model.forward(&preps[i])?;
        sum += loss.apply(&pred, &targets[i])?.0;
    }
    Ok(sum / idx.len() as f64)
}

/// Stacks single-row predictions over `idx` into an `[idx.len(), t]`
/// tensor.
pub fn predict_all<M: GraphModel>(
    model: &M,
    preps: &[M::Prep],
    idx: &[usize],
) -> Result<Tensor> {
    if idx.is_empty() {
        return Err(Error::Domain("prediction over an empty index set".into()));
    }
    let first = model.forward(&preps[idx[0]])?;
    let t = first.cols();
    let mut out = Tensor::zeros(&[idx.len(), t]);
    out.row_mut(0).copy_from_slice(first.data());
    for (r, &i) in idx.iter().enumerate().skip(1) {
        let pred = model.forward(&preps[i])?;
        out.row_mut(r).copy_from_slice(pred.data());
    }
    Ok(out)
}

/// Stacks target rows over `idx` into an `[idx.len(), t]` tensor.
pub fn stack_targets(targets: &[Tensor], idx: &[usize]) -> Result<Tensor> {
    if idx.is_empty() {
        return Err(Error::Domain("empty index set".into()));
    }
    let t = targets[idx[0]].cols();
    let mut out = Tensor::zeros(&[idx.len(), t]);
    for (r, &i) in idx.iter().enumerate() {
        out.row_mut(r).copy_from_slice(targets[i].data());
    }
    Ok(out)
}

/// Trains `model` in place on `train_idx`, tracking `val_idx` (falls
/// back to the training metric when empty). Deterministic given `seed`.
pub fn train_model<M: GraphModel>(
    model: &mut M,
    preps: &[M::Prep],
    targets: &[Tensor],
    train_idx: &[usize],
    val_idx: &[usize],
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<TrainOutcome> {
    if preps.len() != targets.len() {
        return Err(Error::Dimension(format!(
            "{} prepared samples but {} targets",
            preps.len(),
            targets.len()
        )));
    }
    if train_idx.is_empty() {
        return Err(Error::Config("training set is empty".into()));
    }
    if let Some(&bad) = train_idx.iter().chain(val_idx).find(|&&i| i >= preps.len()) {
        return Err(Error::Config(format!(
            "split index {bad} out of range for {} samples",
            preps.len()
        )));
    }

    let tracked_idx: &[usize] = if val_idx.is_empty() { train_idx } else { val_idx };
    if cfg.max_epochs == 0 {
        let initial = eval_loss(model, preps, targets, tracked_idx, cfg.loss)?;
        return Ok(TrainOutcome {
            best_epoch: 0,
            final_epoch: 0,
            best_val: initial,
            train_curve: vec![],
            val_curve: vec![],
            untrained: true,
        });
    }

    let mut params = model.pack();
    let mut opt = Optimizer::new(cfg.optimizer, params.len(), cfg.lr, cfg.weight_decay);
    let mut sched = PlateauScheduler::new(
        cfg.lr,
        cfg.scheduler.factor,
        cfg.scheduler.patience,
        cfg.scheduler.floor,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = train_idx.to_vec();

    let mut best_val = f64::INFINITY;
    let mut best_params = params.clone();
    let mut best_epoch = 0usize;
    let mut idle = 0usize;
    let mut train_curve = Vec::new();
    let mut val_curve = Vec::new();
    let mut final_epoch = 0usize;

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let mut grads = model.zero_grads();
            let mut batch_loss = 0.0;
            for &i in batch {
                batch_loss +=
                    model.forward_backward(&preps[i], &targets[i], cfg.loss, &mut grads)?;
            }
            if !batch_loss.is_finite() {
                return Err(Error::Training(format!(
                    "non-finite training loss at epoch {epoch}"
                )));
            }
            let mut flat = grads.pack();
            let inv = 1.0 / batch.len() as f64;
            for g in &mut flat {
                *g *= inv;
            }
            opt.step(&mut params, &flat)
                .map_err(|e| Error::Training(format!("epoch {epoch}: {e}")))?;
            model.unpack(&params)?;
            loss_sum += batch_loss;
        }
        let train_loss = loss_sum / train_idx.len() as f64;
        let val_loss = if val_idx.is_empty() {
            train_loss
        } else {
            eval_loss(model, preps, targets, val_idx, cfg.loss)?
        };
        if !val_loss.is_finite() {
            return Err(Error::Training(format!(
                "non-finite validation loss at epoch {epoch}"
            )));
        }
        train_curve.push(train_loss);
        val_curve.push(val_loss);
        final_epoch = epoch;

        if val_loss < best_val {
            best_val = val_loss;
            best_params.copy_from_slice(&params);
            best_epoch = epoch;
            idle = 0;
        } else {
            idle += 1;
        }
        opt.lr = sched.step(val_loss)?;

        if cfg.stop_below_train.map_or(false, |t| train_loss < t) {
            break;
        }
        if cfg.early_stop_patience.map_or(false, |p| idle >= p) {
            break;
        }
    }

    model.unpack(&best_params)?;
    Ok(TrainOutcome {
        best_epoch,
        final_epoch,
        best_val,
        train_curve,
        val_curve,
        untrained: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::ExperimentConfig;
    use crate::harness::data::generate_planted_filter_dataset;
    use crate::harness::model::FilterModel;
    use crate::nn::ParamPack;
    use crate::theory::{random_shift_pair, FilterClass};
    use rand_chacha::ChaCha8Rng;

    fn planted_setup() -> (FilterModel, Vec<crate::harness::model::FilterPrep>, Vec<Tensor>) {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_shift_pair(3, true, &mut rng);
        let sigma = Tensor::eye(3);
        let (samples, _) = planted_noiseless(&s, &sigma);
        let model = FilterModel::new(FilterClass::HGt, 2, &s, &sigma).unwrap();
        let preps: Vec<_> = samples.iter().map(|x| model.prepare(x).unwrap()).collect();
        let targets: Vec<Tensor> = samples.iter().map(|x| x.target_row()).collect();
        (model, preps, targets)
    }

    fn planted_noiseless(
        s: &crate::theory::ShiftPair,
        sigma: &Tensor,
    ) -> (Vec<crate::harness::data::Sample>, crate::harness::data::PlantedMeta) {
        generate_planted_filter_dataset(s, &[0.4, 1.0], 0.8, sigma, 0.0, 2, 40, 17).unwrap()
    }

    fn smoke_cfg() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::planted_default();
        cfg.max_epochs = 200;
        cfg.batch_size = 8;
        cfg
    }

    #[test]
    fn noiseless_filter_fit_drives_loss_down() {
        let (mut model, preps, targets) = planted_setup();
        let train: Vec<usize> = (0..30).collect();
        let val: Vec<usize> = (30..40).collect();
        let cfg = smoke_cfg();
        let outcome = train_model(&mut model, &preps, &targets, &train, &val, &cfg, 7).unwrap();
        assert!(!outcome.untrained);
        assert!(outcome.best_epoch <= outcome.final_epoch);
        let min_val = outcome
            .val_curve
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        assert_eq!(outcome.best_val, min_val, "best is the minimum observed");
        // Exact recovery is possible (M* lies in the span, no noise).
        assert!(outcome.best_val < 1e-3, "val loss {}", outcome.best_val);
    }

    #[test]
    fn zero_epochs_flags_untrained() {
        let (mut model, preps, targets) = planted_setup();
        let before = model.pack();
        let mut cfg = smoke_cfg();
        cfg.max_epochs = 0;
        let idx: Vec<usize> = (0..40).collect();
        let outcome = train_model(&mut model, &preps, &targets, &idx, &[], &cfg, 7).unwrap();
        assert!(outcome.untrained);
        assert_eq!(outcome.final_epoch, 0);
        assert_eq!(model.pack(), before, "model unchanged");
    }

    #[test]
    fn training_is_deterministic() {
        let (model0, preps, targets) = planted_setup();
        let train: Vec<usize> = (0..30).collect();
        let val: Vec<usize> = (30..40).collect();
        let cfg = smoke_cfg();
        let mut m1 = FilterModel {
            class: model0.class,
            basis: model0.basis.clone(),
            coeffs: model0.coeffs.clone(),
        };
        let mut m2 = FilterModel {
            class: model0.class,
            basis: model0.basis.clone(),
            coeffs: model0.coeffs.clone(),
        };
        let o1 = train_model(&mut m1, &preps, &targets, &train, &val, &cfg, 9).unwrap();
        let o2 = train_model(&mut m2, &preps, &targets, &train, &val, &cfg, 9).unwrap();
        assert_eq!(o1, o2);
        assert_eq!(m1.pack(), m2.pack());
    }

    #[test]
    fn early_stop_respects_patience() {
        let (mut model, preps, targets) = planted_setup();
        let train: Vec<usize> = (0..30).collect();
        let val: Vec<usize> = (30..40).collect();
        let mut cfg = smoke_cfg();
        cfg.early_stop_patience = Some(5);
        cfg.max_epochs = 1000;
        let outcome = train_model(&mut model, &preps, &targets, &train, &val, &cfg, 11).unwrap();
        assert!(
            outcome.final_epoch < 1000,
            "stops well before the cutoff once converged"
        );
        assert!(outcome.final_epoch - outcome.best_epoch <= 6);
    }

    #[test]
    fn stop_below_train_target_exits_early() {
        let (mut model, preps, targets) = planted_setup();
        let idx: Vec<usize> = (0..40).collect();
        let mut cfg = smoke_cfg();
        cfg.stop_below_train = Some(1e-2);
        cfg.max_epochs = 2000;
        cfg.early_stop_patience = None;
        let outcome = train_model(&mut model, &preps, &targets, &idx, &[], &cfg, 13).unwrap();
        assert!(outcome.final_epoch < 2000);
        assert!(*outcome.train_curve.last().unwrap() < 1e-2);
    }
}
