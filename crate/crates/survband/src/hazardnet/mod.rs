//! From-scratch multilayer perceptron for the log relative risk g(t, x),
//! with standardized time as the first input feature.
//!
//! Training minimizes the case-control-sampled Cox partial likelihood with
//! Adam, evaluating a fixed validation batch each epoch and stopping once
//! the validation loss has not improved for more than `patience` consecutive
//! epochs. The returned parameters are those of the best epoch.

mod net;
mod train;

pub use net::{HazardNet, Mode};
pub use train::{
    assemble_batch, ccl_grad_from_g, ccl_loss, ccl_loss_from_g, draw_case_controls, train,
    train_on_rows, CaseControlBatch,
};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::Standardization;
use crate::error::{Error, Result};
use crate::survest::BreslowBaseline;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetConfig {
    pub hidden_layers: usize,
    pub layer_width: usize,
    pub dropout_rate: f64,
    pub learning_rate: f64,
    /// Number of events per gradient batch.
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    /// Controls sampled per event from its risk set, with replacement.
    pub n_controls: usize,
    pub seed: u64,
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig {
            hidden_layers: 2,
            layer_width: 32,
            dropout_rate: 0.1,
            learning_rate: 1e-3,
            batch_size: 256,
            max_epochs: 128,
            patience: 10,
            n_controls: 8,
            seed: 0,
        }
    }
}

impl NetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_layers == 0 {
            return Err(Error::Config("hidden_layers must be >= 1".into()));
        }
        if self.layer_width == 0
            || self.batch_size == 0
            || self.max_epochs == 0
            || self.patience == 0
            || self.n_controls == 0
        {
            return Err(Error::Config("all counts must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Config(format!(
                "dropout_rate {} not in [0, 1)",
                self.dropout_rate
            )));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be > 0".into()));
        }
        Ok(())
    }

    /// Parse plain-text `key=value` lines (blank lines and `#` comments
    /// allowed), starting from the defaults.
    pub fn from_key_values(text: &str) -> Result<Self> {
        let mut cfg = NetConfig::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key=value", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |e: &dyn std::fmt::Display| {
                Error::Config(format!("line {}: bad value for {key}: {e}", lineno + 1))
            };
            match key {
                "hidden_layers" => cfg.hidden_layers = value.parse().map_err(|e| bad(&e))?,
                "layer_width" => cfg.layer_width = value.parse().map_err(|e| bad(&e))?,
                "dropout_rate" => cfg.dropout_rate = value.parse().map_err(|e| bad(&e))?,
                "learning_rate" => cfg.learning_rate = value.parse().map_err(|e| bad(&e))?,
                "batch_size" => cfg.batch_size = value.parse().map_err(|e| bad(&e))?,
                "max_epochs" => cfg.max_epochs = value.parse().map_err(|e| bad(&e))?,
                "patience" => cfg.patience = value.parse().map_err(|e| bad(&e))?,
                "n_controls" => cfg.n_controls = value.parse().map_err(|e| bad(&e))?,
                "seed" => cfg.seed = value.parse().map_err(|e| bad(&e))?,
                other => return Err(Error::Config(format!("unknown config key '{other}'"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs_run: usize,
    /// 1-based epoch whose validation loss was smallest.
    pub best_epoch: usize,
    pub train_loss_history: Vec<f64>,
    pub valid_loss_history: Vec<f64>,
    pub stopped_early: bool,
    /// Events whose risk set (beyond themselves) was empty in the last
    /// epoch, contributing log(1) to the loss.
    pub events_without_controls: usize,
    /// Instrumentation: gradient-batch rows that belong to the validation
    /// set. Always zero; training never reads validation records.
    pub valid_rows_in_gradients: usize,
}

/// Early-stopping bookkeeping: training stops once the number of
/// consecutive epochs without a strict improvement exceeds `patience`.
#[derive(Debug, Clone)]
pub(crate) struct EarlyStopper {
    patience: usize,
    pub best: f64,
    pub best_epoch: usize,
    streak: usize,
}

impl EarlyStopper {
    pub fn new(patience: usize) -> Self {
        EarlyStopper { patience, best: f64::INFINITY, best_epoch: 0, streak: 0 }
    }

    /// Observe the validation loss of `epoch` (1-based); returns
    /// `(improved, stop)`.
    pub fn observe(&mut self, epoch: usize, loss: f64) -> (bool, bool) {
        if loss < self.best {
            self.best = loss;
            self.best_epoch = epoch;
            self.streak = 0;
            (true, false)
        } else {
            self.streak += 1;
            (false, self.streak > self.patience)
        }
    }
}

/// Self-describing model checkpoint: layer shapes and parameters,
/// normalization statistics, the input standardization constants, and
/// optionally the fitted baseline hazard. JSON round-trips every f64
/// bit-exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub net: HazardNet,
    pub standardization: Standardization,
    pub baseline: Option<BreslowBaseline>,
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}
