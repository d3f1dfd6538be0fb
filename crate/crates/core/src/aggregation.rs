//! Model-based RL with on-policy data aggregation.
//!
//! Random rollouts seed `D_rand` (a seeded share is held out for validation).
//! Each iteration trains the model warm-started from the previous iteration on
//! mini-batches mixed from `D_rand` and `D_rl`, runs MPC episodes through the
//! fresh model in the true environment, and appends those transitions to `D_rl`.
//!
//! Randomness is split into named streams of the run seed (`data`, `split`,
//! `net_init`, `train`, `mpc_init`, `shooting`), so changing one component does
//! not reshuffle the others.

use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::control::{mpc_run, MpcConfig, Reward};
use crate::dynamics::{
    h_step_validation, slice_trajectories, train_dynamics, Dynamics, DynamicsModel, NoiseSpace, Provenance, Split, TrainConfig,
    Trajectory, TransitionDataset,
};
use crate::envs::{collect_random_rollouts, sample_initial_state, EnvSpec, Environment, Exploration};
use crate::error::{Error, Result};
use crate::nn::{Activation, AdamConfig, AdamState, Mlp};
use crate::seeding;

/// Validation horizons always reported, in addition to the planning horizon.
pub const VALIDATION_HORIZONS: [usize; 3] = [1, 5, 10];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsNetConfig {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub noise_sigma: f64,
    pub noise_space: NoiseSpace,
}

impl Default for DynamicsNetConfig {
    fn default() -> Self {
        Self {
            hidden: vec![500, 500],
            activation: Activation::Relu,
            learning_rate: 1e-3,
            batch_size: 512,
            noise_sigma: 0.001,
            noise_space: NoiseSpace::Normalized,
        }
    }
}

impl DynamicsNetConfig {
    pub fn train_config(&self, epochs: usize, split: Split) -> TrainConfig {
        TrainConfig {
            epochs,
            batch_size: self.batch_size,
            split,
            noise_sigma: self.noise_sigma,
            noise_space: self.noise_space,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregationConfig {
    pub max_iter: usize,
    pub rollouts_per_iter: usize,
    pub rollout_length: usize,
    pub epochs_per_iter: usize,
    pub split: Split,
    pub mpc: MpcConfig,
}

impl Default for AggregationConfig {
    fn default() -> Self {
        Self {
            max_iter: 6,
            rollouts_per_iter: 9,
            rollout_length: 333,
            epochs_per_iter: 30,
            split: Split::MOSTLY_RL,
            mpc: MpcConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MbrlConfig {
    pub env: EnvSpec,
    pub init_rollouts: usize,
    /// States per random rollout; each yields `init_rollout_length - 1` transitions.
    pub init_rollout_length: usize,
    pub exploration: Exploration,
    /// Share of random rollouts held out as validation trajectories.
    pub val_fraction: f64,
    pub net: DynamicsNetConfig,
    pub aggregation: AggregationConfig,
}

impl MbrlConfig {
    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.aggregation.split.validate()?;
        self.aggregation.mpc.validate()?;
        if self.init_rollouts == 0 || self.init_rollout_length < 2 {
            return Err(Error::InvalidArgument("need at least one random rollout of length >= 2".into()));
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return Err(Error::InvalidArgument("val_fraction must lie in [0, 1)".into()));
        }
        if self.net.hidden.contains(&0) {
            return Err(Error::InvalidArgument("hidden layer sizes must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationMetrics {
    pub iter: usize,
    /// Random-data transitions plus all on-policy transitions collected so far.
    pub env_steps_cumulative: usize,
    /// Mean realized return of this iteration's MPC episodes (NaN if none ran).
    pub mean_return: f64,
    /// H-step validation error for each reported horizon (NaN if too long).
    pub val_errors: Vec<(usize, f64)>,
    pub train_loss: f64,
    pub rl_transitions: usize,
    /// SHA-256 of the network parameters before and after this iteration's training.
    pub params_before: String,
    pub params_after: String,
}

impl IterationMetrics {
    pub fn val_error(&self, h: usize) -> Option<f64> {
        self.val_errors.iter().find(|(k, _)| *k == h).map(|(_, v)| *v)
    }
}

#[derive(Debug, Clone)]
pub struct MbrlOutcome {
    pub model: DynamicsModel,
    pub metrics: Vec<IterationMetrics>,
    pub d_rand: TransitionDataset,
    pub d_rl: TransitionDataset,
    pub val_trajectories: Vec<Trajectory>,
    pub mpc_episodes: Vec<Vec<Trajectory>>,
}

impl MbrlOutcome {
    pub fn final_return(&self) -> Option<f64> {
        self.metrics.last().map(|m| m.mean_return)
    }
}

/// Hex SHA-256 of the parameter bit patterns.
pub fn param_fingerprint(net: &Mlp) -> String {
    let mut h = Sha256::new();
    for v in net.flat_params() {
        h.update(v.to_bits().to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Random rollouts split into `(train, validation)` by seeded shuffle.
pub fn collect_initial_data(cfg: &MbrlConfig, seed: u64) -> Result<(Vec<Trajectory>, Vec<Trajectory>)> {
    let trajs = collect_random_rollouts(
        &cfg.env,
        cfg.init_rollouts,
        cfg.init_rollout_length,
        seeding::stream(seed, "data"),
        cfg.exploration,
    )?;
    let n_val = (cfg.val_fraction * cfg.init_rollouts as f64).round() as usize;
    let n_val = n_val.min(cfg.init_rollouts.saturating_sub(1));
    let mut order: Vec<usize> = (0..trajs.len()).collect();
    order.shuffle(&mut seeding::rng(seeding::stream(seed, "split")));
    let (val_idx, _) = order.split_at(n_val);
    let mut train = Vec::new();
    let mut val = Vec::new();
    for (i, t) in trajs.into_iter().enumerate() {
        if val_idx.contains(&i) {
            val.push(t);
        } else {
            train.push(t);
        }
    }
    Ok((train, val))
}

/// Validation errors at each requested horizon; horizons longer than every
/// trajectory (or an empty validation set) report NaN.
pub fn validation_errors<D: Dynamics + ?Sized>(model: &D, val: &[Trajectory], horizons: &[usize]) -> Vec<(usize, f64)> {
    horizons
        .iter()
        .map(|&h| (h, h_step_validation(model, val, h).unwrap_or(f64::NAN)))
        .collect()
}

pub fn reported_horizons(mpc_horizon: usize) -> Vec<usize> {
    let mut hs = VALIDATION_HORIZONS.to_vec();
    if !hs.contains(&mpc_horizon) {
        hs.push(mpc_horizon);
    }
    hs
}

/// Called after each iteration with its metrics and the freshly trained model.
pub type IterationHook<'a> = dyn FnMut(&IterationMetrics, &DynamicsModel) -> Result<()> + 'a;

/// Full aggregation run; bit-reproducible for fixed `(cfg, seed)` in serial mode.
pub fn run_mbrl<R: Reward + ?Sized>(
    cfg: &MbrlConfig,
    reward: &R,
    seed: u64,
    mut hook: Option<&mut IterationHook<'_>>,
) -> Result<MbrlOutcome> {
    cfg.validate()?;
    let env = &cfg.env;
    let (train, val) = collect_initial_data(cfg, seed)?;
    let d_rand = slice_trajectories(&train, Provenance::Rand)?;
    let mut d_rl = TransitionDataset::empty(env.state_dim(), env.action_dim(), Provenance::Rl);
    let mut model = DynamicsModel::new(
        env.state_dim(),
        env.action_dim(),
        &cfg.net.hidden,
        cfg.net.activation,
        seeding::stream(seed, "net_init"),
    )?;
    let mut adam = AdamState::new(&model.net, AdamConfig::with_learning_rate(cfg.net.learning_rate));
    let agg = &cfg.aggregation;
    let train_cfg = cfg.net.train_config(agg.epochs_per_iter, agg.split);
    let horizons = reported_horizons(agg.mpc.horizon);
    let random_steps = d_rand.len() + val.iter().map(Trajectory::len).sum::<usize>();

    let mut metrics = Vec::with_capacity(agg.max_iter);
    let mut episodes = Vec::with_capacity(agg.max_iter);
    for iter in 0..agg.max_iter {
        let params_before = param_fingerprint(&model.net);
        let report = train_dynamics(
            &mut model,
            &d_rand,
            &d_rl,
            &train_cfg,
            &mut adam,
            seeding::child(seeding::stream(seed, "train"), iter as u64),
        )
        .map_err(|e| Error::Numerical(format!("aggregation iteration {iter}: {e}")))?;
        let params_after = param_fingerprint(&model.net);

        let mut returns = Vec::new();
        let mut iter_episodes = Vec::new();
        if agg.rollout_length > 0 {
            for r in 0..agg.rollouts_per_iter {
                let idx = (iter * agg.rollouts_per_iter + r) as u64;
                let mut rng = seeding::rng(seeding::child(seeding::stream(seed, "mpc_init"), idx));
                let s0 = sample_initial_state(env, &mut rng, Exploration::Standard)?;
                let mpc = MpcConfig {
                    rng_seed: seeding::child(seeding::stream(seed, "shooting"), idx),
                    ..agg.mpc.clone()
                };
                let ep = mpc_run(env, &model, reward, &s0, agg.rollout_length, &mpc)?;
                returns.push(ep.total_return());
                d_rl.extend(&ep.trajectory)?;
                iter_episodes.push(ep.trajectory);
            }
        }
        let mean_return = if returns.is_empty() {
            f64::NAN
        } else {
            returns.iter().sum::<f64>() / returns.len() as f64
        };
        let m = IterationMetrics {
            iter,
            env_steps_cumulative: random_steps + d_rl.len(),
            mean_return,
            val_errors: validation_errors(&model, &val, &horizons),
            train_loss: report.final_loss().unwrap_or(f64::NAN),
            rl_transitions: d_rl.len(),
            params_before,
            params_after,
        };
        if let Some(h) = hook.as_mut() {
            h(&m, &model)?;
        }
        metrics.push(m);
        episodes.push(iter_episodes);
    }
    Ok(MbrlOutcome {
        model,
        metrics,
        d_rand,
        d_rl,
        val_trajectories: val,
        mpc_episodes: episodes,
    })
}

/// Metrics CSV: `iter, env_steps_cumulative, mean_return, val_err_H1, val_err_H5,
/// val_err_H10[, val_err_H<mpc>], train_loss`.
pub fn write_metrics_csv(path: &Path, metrics: &[IterationMetrics]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let horizons: Vec<usize> = metrics
        .first()
        .map(|m| m.val_errors.iter().map(|(h, _)| *h).collect())
        .unwrap_or_else(|| VALIDATION_HORIZONS.to_vec());
    let mut header = vec!["iter".to_string(), "env_steps_cumulative".into(), "mean_return".into()];
    header.extend(horizons.iter().map(|h| format!("val_err_H{h}")));
    header.push("train_loss".into());
    w.write_record(&header)?;
    for m in metrics {
        let mut rec = vec![m.iter.to_string(), m.env_steps_cumulative.to_string(), m.mean_return.to_string()];
        rec.extend(m.val_errors.iter().map(|(_, v)| v.to_string()));
        rec.push(m.train_loss.to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
