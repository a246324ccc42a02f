//! Mini-batch training loop with validation-based early stopping.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adamw::{AdamW, AdamWConfig};
use super::grad::{backward, batch_mae};
use crate::error::{DramnError, Result};
use crate::model::{forward, ModelInput, ModelParams, Variant};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    Mae,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub early_stop_patience: usize,
    pub val_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
    pub loss: Loss,
    /// Evaluate per-sample gradients one after another instead of on the thread pool.
    pub deterministic: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 1e-3,
            weight_decay: 1e-2,
            epochs: 100,
            batch_size: 32,
            early_stop_patience: 10,
            val_fraction: 0.1,
            test_fraction: 0.2,
            seed: 0,
            loss: Loss::Mae,
            deterministic: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let frac_ok = |f: f64| f > 0.0 && f < 1.0;
        if !frac_ok(self.val_fraction) || !frac_ok(self.test_fraction) {
            return Err(DramnError::Config("split fractions must lie in (0, 1)".into()));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(DramnError::Config("epochs and batch_size must be positive".into()));
        }
        if !(self.lr > 0.0) || !(self.weight_decay >= 0.0) {
            return Err(DramnError::Config("lr must be positive and weight_decay non-negative".into()));
        }
        Ok(())
    }

    pub fn adamw(&self) -> AdamWConfig {
        AdamWConfig {
            lr: self.lr,
            weight_decay: self.weight_decay,
            ..AdamWConfig::default()
        }
    }
}

/// A model input with its binary label (`1.0` = unstable).
#[derive(Debug, Clone)]
pub struct Example {
    pub input: ModelInput,
    pub label: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    /// Wall time of the epoch; zero in deterministic mode so histories are reproducible.
    pub wall_ms: u64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters at the epoch with the lowest validation loss.
    pub params: ModelParams,
    pub history: Vec<EpochRecord>,
    /// One-based epoch whose parameters were kept.
    pub best_epoch: usize,
    pub best_val_loss: f64,
}

pub fn predict(params: &ModelParams, examples: &[Example], parallel: bool) -> Result<Vec<f64>> {
    if parallel {
        examples.par_iter().map(|e| forward(&e.input, params)).collect()
    } else {
        examples.iter().map(|e| forward(&e.input, params)).collect()
    }
}

pub fn mean_loss(params: &ModelParams, examples: &[Example], parallel: bool) -> Result<f64> {
    let p = predict(params, examples, parallel)?;
    let pairs: Vec<(f64, f64)> = p.into_iter().zip(examples.iter().map(|e| e.label)).collect();
    Ok(batch_mae(&pairs))
}

/// Trains from `init` and returns the best-validation parameters.
pub fn train(init: ModelParams, train_set: &[Example], val_set: &[Example], cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(DramnError::DatasetTooSmall("training and validation sets must be non-empty".into()));
    }
    let parallel = !cfg.deterministic;
    let mut params = init;
    let mut opt = AdamW::new(&params, cfg.adamw());
    if params.variant == Variant::IdentityLstm {
        opt = opt.freeze("alpha");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut history = Vec::new();
    let mut best = (params.clone(), 0usize, f64::INFINITY);
    let mut wait = 0usize;

    for epoch in 1..=cfg.epochs {
        let started = Instant::now();
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            let run = |&i: &usize| backward(&train_set[i].input, &params, train_set[i].label);
            let results: Vec<_> = if parallel {
                batch.par_iter().map(run).collect()
            } else {
                batch.iter().map(run).collect()
            };
            let mut acc = params.zeros_like();
            let scale = 1.0 / batch.len() as f64;
            for r in results {
                let (loss, g) = r.map_err(|e| e.within(format!("epoch {epoch}, batch {b}")))?;
                loss_sum += loss;
                acc.axpy(scale, &g);
            }
            opt.step(&mut params, &acc);
            if !params.is_finite() {
                return Err(DramnError::numerical(
                    format!("epoch {epoch}, batch {b}"),
                    "parameters became non-finite",
                ));
            }
        }
        let train_loss = loss_sum / train_set.len() as f64;
        let val_loss = mean_loss(&params, val_set, parallel).map_err(|e| e.within(format!("epoch {epoch}, validation")))?;
        let wall_ms = if cfg.deterministic {
            0
        } else {
            started.elapsed().as_millis() as u64
        };
        history.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
            wall_ms,
        });
        if val_loss < best.2 {
            best = (params.clone(), epoch, val_loss);
            wait = 0;
        } else {
            wait += 1;
            if wait > cfg.early_stop_patience {
                break;
            }
        }
    }
    Ok(TrainOutcome {
        params: best.0,
        history,
        best_epoch: best.1,
        best_val_loss: best.2,
    })
}
