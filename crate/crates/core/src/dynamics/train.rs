//! Mini-batch training of the delta-state model on `D_rand ∪ D_rl`.

use ndarray::{Array2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::data::{augment_noise, NormStats, TransitionDataset};
use super::model::DynamicsModel;
use crate::error::{Error, Result};
use crate::nn::{half_squared_error, AdamState};
use crate::seeding::{self, SeedRng};

/// Fraction of each mini-batch drawn from `D_rand` and `D_rl`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub rand: f64,
    pub rl: f64,
}

impl Split {
    pub const RAND_ONLY: Split = Split { rand: 1.0, rl: 0.0 };
    /// 10% random data, 90% on-policy data.
    pub const MOSTLY_RL: Split = Split { rand: 0.1, rl: 0.9 };

    pub fn new(rand: f64, rl: f64) -> Result<Self> {
        let s = Split { rand, rl };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = (0.0..=1.0).contains(&self.rand)
            && (0.0..=1.0).contains(&self.rl)
            && (self.rand + self.rl - 1.0).abs() < 1e-9;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "split fractions must lie in [0,1] and sum to 1, got ({}, {})",
                self.rand, self.rl
            )))
        }
    }

    /// Samples drawn from each pool for a batch of `batch` rows:
    /// `ceil(rand * batch)` from `D_rand`, the remainder from `D_rl`. An empty pool
    /// hands its whole quota to the other.
    pub fn quota(&self, batch: usize, rand_len: usize, rl_len: usize) -> (usize, usize) {
        if rl_len == 0 {
            return (batch, 0);
        }
        if rand_len == 0 {
            return (0, batch);
        }
        let from_rand = ((self.rand * batch as f64) - 1e-9).ceil().max(0.0) as usize;
        let from_rand = from_rand.min(batch);
        (from_rand, batch - from_rand)
    }
}

impl Default for Split {
    fn default() -> Self {
        Split::MOSTLY_RL
    }
}

/// Where augmentation noise is injected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseSpace {
    #[default]
    Normalized,
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub split: Split,
    pub noise_sigma: f64,
    pub noise_space: NoiseSpace,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 60,
            batch_size: 512,
            split: Split::MOSTLY_RL,
            noise_sigma: 0.001,
            noise_space: NoiseSpace::Normalized,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainReport {
    /// Mean normalized-space loss of each epoch.
    pub epoch_losses: Vec<f64>,
    /// `(from_rand, from_rl)` counts of the first mini-batch, if any ran.
    pub batch_composition: Option<(usize, usize)>,
}

impl TrainReport {
    pub fn final_loss(&self) -> Option<f64> {
        self.epoch_losses.last().copied()
    }
}

/// Indices for one mini-batch, drawn with replacement from each pool.
pub fn sample_batch_indices(
    rng: &mut SeedRng,
    split: Split,
    batch: usize,
    rand_len: usize,
    rl_len: usize,
) -> (Vec<usize>, Vec<usize>) {
    let (nr, nl) = split.quota(batch, rand_len, rl_len);
    let a = (0..nr).map(|_| rng.random_range(0..rand_len)).collect();
    let b = (0..nl).map(|_| rng.random_range(0..rl_len)).collect();
    (a, b)
}

/// Trains `model` in place (warm start) on both pools. Normalization statistics
/// are recomputed over the union before the first epoch.
pub fn train_dynamics(
    model: &mut DynamicsModel,
    d_rand: &TransitionDataset,
    d_rl: &TransitionDataset,
    cfg: &TrainConfig,
    adam: &mut AdamState,
    seed: u64,
) -> Result<TrainReport> {
    cfg.split.validate()?;
    if d_rand.is_empty() && d_rl.is_empty() {
        return Err(Error::EmptyDataset("both D_rand and D_rl are empty"));
    }
    if cfg.batch_size == 0 {
        return Err(Error::InvalidArgument("batch size must be positive".into()));
    }
    for d in [d_rand, d_rl] {
        if d.state_dim() != model.stats.state_dim() || d.state_dim() + d.action_dim() != model.net.input_dim() {
            return Err(Error::dim("training dataset width", model.net.input_dim(), d.state_dim() + d.action_dim()));
        }
    }
    let noise_seed = seeding::stream(seed, "noise");
    let (raw_rand, raw_rl) = match cfg.noise_space {
        NoiseSpace::Raw => (
            augment_noise(d_rand, cfg.noise_sigma, seeding::child(noise_seed, 0))?,
            augment_noise(d_rl, cfg.noise_sigma, seeding::child(noise_seed, 1))?,
        ),
        NoiseSpace::Normalized => (d_rand.clone(), d_rl.clone()),
    };
    model.stats = NormStats::from_datasets(&[&raw_rand, &raw_rl])?;
    let mut pools = [model.stats.normalize_dataset(&raw_rand), model.stats.normalize_dataset(&raw_rl)];
    if cfg.noise_space == NoiseSpace::Normalized {
        for (i, pool) in pools.iter_mut().enumerate() {
            *pool = augment_noise(pool, cfg.noise_sigma, seeding::child(noise_seed, i as u64))?;
        }
    }
    let [rand_pool, rl_pool] = &pools;

    let total = rand_pool.len() + rl_pool.len();
    let batches_per_epoch = total.div_ceil(cfg.batch_size);
    let mut rng = seeding::rng(seeding::stream(seed, "batches"));
    let mut report = TrainReport::default();
    let width = model.net.input_dim();
    let out = model.net.output_dim();

    for epoch in 0..cfg.epochs {
        let mut sum = 0.0;
        for _ in 0..batches_per_epoch {
            let (ri, li) = sample_batch_indices(&mut rng, cfg.split, cfg.batch_size, rand_pool.len(), rl_pool.len());
            if report.batch_composition.is_none() {
                report.batch_composition = Some((ri.len(), li.len()));
            }
            let rows = ri.len() + li.len();
            let mut x = Array2::zeros((rows, width));
            let mut y = Array2::zeros((rows, out));
            let picks = ri.iter().map(|&i| (rand_pool, i)).chain(li.iter().map(|&i| (rl_pool, i)));
            for (r, (pool, i)) in picks.enumerate() {
                x.row_mut(r).assign(&pool.inputs().row(i));
                y.row_mut(r).assign(&pool.labels().row(i));
            }
            let trace = model.net.forward_trace(x.view())?;
            let (loss, grad) = half_squared_error(trace.output().view(), y.view());
            if !loss.is_finite() {
                return Err(Error::Numerical(format!("non-finite training loss at epoch {epoch}")));
            }
            let (grads, _) = model.net.backward_trace(&trace, grad.view())?;
            adam.step(&mut model.net, &grads)?;
            sum += loss;
        }
        report.epoch_losses.push(sum / batches_per_epoch as f64);
    }
    Ok(report)
}

/// Training objective in raw units: mean of `½‖(s' − s) − f(s, a)‖²`.
pub fn one_step_objective_raw(model: &DynamicsModel, dataset: &TransitionDataset) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset("objective over an empty dataset"));
    }
    let pred = model.predict_delta_inputs(dataset.inputs().view())?;
    let (loss, _) = half_squared_error(pred.view(), dataset.labels().view());
    Ok(loss)
}

/// Mean squared one-step error in raw units, averaged over state components.
pub fn one_step_mse_raw(model: &DynamicsModel, dataset: &TransitionDataset) -> Result<f64> {
    let pred = model.predict_delta_inputs(dataset.inputs().view())?;
    let diff = pred - dataset.labels();
    Ok(diff.mapv(|v| v * v).mean_axis(Axis(0)).map(|m| m.mean().unwrap_or(0.0)).unwrap_or(0.0))
}
