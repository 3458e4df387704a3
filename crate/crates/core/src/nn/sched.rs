//! Reduce-on-plateau learning-rate schedule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Multiplies the learning rate by `factor` after `patience` consecutive
/// epochs without improvement of the tracked metric, never dropping
/// below `floor`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlateauScheduler {
    lr: f64,
    pub factor: f64,
    pub patience: u32,
    pub floor: f64,
    best: Option<f64>,
    idle: u32,
}

impl PlateauScheduler {
    pub fn new(initial_lr: f64, factor: f64, patience: u32, floor: f64) -> Self {
        Self {
            lr: initial_lr,
            factor,
            patience,
            floor,
            best: None,
            idle: 0,
        }
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    /// Feed one epoch's metric (lower is better); returns the new lr.
    pub fn step(&mut self, metric: f64) -> Result<f64> {
        if !metric.is_finite() {
            return Err(Error::Numeric("plateau metric must be finite".into()));
        }
        let improved = match self.best {
            None => true,
            Some(best) => metric < best,
        };
        if improved {
            self.best = Some(metric);
            self.idle = 0;
        } else {
            self.idle += 1;
            if self.idle >= self.patience {
                self.lr = (self.lr * self.factor).max(self.floor);
                self.idle = 0;
            }
        }
        Ok(self.lr)
    }
}
