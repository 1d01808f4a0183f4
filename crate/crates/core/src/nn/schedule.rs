use serde::{Deserialize, Serialize};

use super::NnError;

/// Multiplies the learning rate by `factor` whenever the monitored metric
/// has not improved for `patience` consecutive epochs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlateauScheduler {
    pub factor: f64,
    pub patience: usize,
    #[serde(skip)]
    best: Option<f64>,
    #[serde(skip)]
    bad_epochs: usize,
}

impl PlateauScheduler {
    pub fn new(factor: f64, patience: usize) -> Self {
        Self { factor, patience, best: None, bad_epochs: 0 }
    }

    /// Records one epoch's metric and returns the (possibly reduced) rate.
    pub fn step(&mut self, metric: f64, lr: f64) -> f64 {
        match self.best {
            Some(best) if metric >= best => {
                self.bad_epochs += 1;
                if self.bad_epochs >= self.patience {
                    self.bad_epochs = 0;
                    return lr * self.factor;
                }
            }
            _ => {
                self.best = Some(metric);
                self.bad_epochs = 0;
            }
        }
        lr
    }
}

/// Signals a stop once the metric has not improved for `patience` epochs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EarlyStopping {
    pub patience: usize,
    #[serde(skip)]
    best: Option<f64>,
    #[serde(skip)]
    since_best: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self { patience, best: None, since_best: 0 }
    }

    /// Records one epoch's metric; true when training should stop.
    pub fn update(&mut self, metric: f64) -> bool {
        match self.best {
            Some(best) if metric >= best => self.since_best += 1,
            _ => {
                self.best = Some(metric);
                self.since_best = 0;
            }
        }
        self.since_best >= self.patience
    }

    /// True if the last recorded metric was a new best.
    pub fn improved(&self) -> bool {
        self.since_best == 0 && self.best.is_some()
    }
}

/// Regularisation and schedule settings of a training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainControl {
    pub scheduler: PlateauScheduler,
    pub early_stopping: EarlyStopping,
    pub l2: f64,
    pub dropout: f64,
}

impl TrainControl {
    pub fn new(factor: f64, scheduler_patience: usize, stop_patience: usize, l2: f64, dropout: f64) -> Self {
        Self {
            scheduler: PlateauScheduler::new(factor, scheduler_patience),
            early_stopping: EarlyStopping::new(stop_patience),
            l2,
            dropout,
        }
    }

    pub fn validate(&self) -> Result<(), NnError> {
        let f = self.scheduler.factor;
        if !(f > 0.0 && f < 1.0) {
            return Err(NnError::InvalidControl(format!("scheduler factor {f} not in (0, 1)")));
        }
        if self.scheduler.patience == 0 || self.early_stopping.patience == 0 {
            return Err(NnError::InvalidControl("patience must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(NnError::InvalidControl(format!("dropout {} not in [0, 1)", self.dropout)));
        }
        if !(self.l2 >= 0.0) {
            return Err(NnError::InvalidControl(format!("negative l2 coefficient {}", self.l2)));
        }
        Ok(())
    }
}
