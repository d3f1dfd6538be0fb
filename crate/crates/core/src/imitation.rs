//! Gaussian policies cloned from the MPC expert, refined with DAgger.

use std::path::Path;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::{mpc_run_noisy, random_shooting, MpcConfig, Reward};
use crate::dynamics::{Dynamics, STD_FLOOR};
use crate::envs::{clip_action, rollout_policy, sample_initial_state, EnvSpec, Environment, Exploration};
use crate::error::{Error, Result};
use crate::nn::{half_squared_error, Activation, AdamConfig, AdamState, Mlp, MlpDocument};
use crate::seeding::{self, SeedRng};

/// Observation standardization fitted on the first cloning dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObsNorm {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// `π(a|s) = N(μ_φ(s), diag(std²))` with a fixed standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPolicy {
    pub mean_net: Mlp,
    pub std: Vec<f64>,
    pub obs_norm: Option<ObsNorm>,
}

impl GaussianPolicy {
    pub fn new(state_dim: usize, action_dim: usize, hidden: &[usize], std: f64, seed: u64) -> Result<Self> {
        if !(std > 0.0 && std.is_finite()) {
            return Err(Error::InvalidArgument(format!("policy std must be positive, got {std}")));
        }
        let mut sizes = vec![state_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(action_dim);
        Ok(Self {
            mean_net: Mlp::init(&sizes, Activation::Tanh, seed)?,
            std: vec![std; action_dim],
            obs_norm: None,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.mean_net.input_dim()
    }

    pub fn action_dim(&self) -> usize {
        self.mean_net.output_dim()
    }

    pub(crate) fn net_inputs(&self, states: ArrayView2<'_, f64>) -> Array2<f64> {
        match &self.obs_norm {
            None => states.to_owned(),
            Some(n) => {
                let mut x = states.to_owned();
                for mut row in x.rows_mut() {
                    for (j, v) in row.iter_mut().enumerate() {
                        *v = (*v - n.mean[j]) / n.std[j];
                    }
                }
                x
            }
        }
    }

    pub fn mean_batch(&self, states: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.mean_net.forward_batch(self.net_inputs(states).view())
    }

    pub fn mean(&self, s: &[f64]) -> Result<Vec<f64>> {
        let x = ArrayView2::from_shape((1, s.len()), s).map_err(|e| Error::Numerical(e.to_string()))?;
        Ok(self.mean_batch(x)?.row(0).to_vec())
    }

    /// Unclipped draw `μ(s) + std·ξ`, `ξ ~ N(0, I)`.
    pub fn sample(&self, s: &[f64], rng: &mut SeedRng) -> Result<Vec<f64>> {
        let mu = self.mean(s)?;
        Ok(mu
            .iter()
            .zip(&self.std)
            .map(|(m, sd)| {
                let xi: f64 = StandardNormal.sample(rng);
                m + sd * xi
            })
            .collect())
    }

    /// Sampled action clipped to the action bounds.
    pub fn act(&self, s: &[f64], rng: &mut SeedRng) -> Result<Vec<f64>> {
        Ok(clip_action(&self.sample(s, rng)?))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&PolicyDocument {
            mean_net: MlpDocument::from(&self.mean_net),
            std: self.std.clone(),
            obs_norm: self.obs_norm.clone(),
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: PolicyDocument = serde_json::from_str(text)?;
        let mean_net = Mlp::try_from(doc.mean_net)?;
        if doc.std.len() != mean_net.output_dim() || doc.std.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::InvalidArgument("policy std must be positive per action dimension".into()));
        }
        Ok(Self {
            mean_net,
            std: doc.std,
            obs_norm: doc.obs_norm,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingArtifact {
                path: path.to_path_buf(),
                hint: "produce a policy with `mbrl imitate` first".into(),
            });
        }
        Self::from_json(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicyDocument {
    mean_net: MlpDocument,
    std: Vec<f64>,
    obs_norm: Option<ObsNorm>,
}

/// Expert `(state, action)` pairs. `labels` are the planner's noiseless choices;
/// `executed` are the actions actually applied.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExpertDataset {
    pub states: Vec<Vec<f64>>,
    pub labels: Vec<Vec<f64>>,
    pub executed: Vec<Vec<f64>>,
    /// Planner seed that reproduces each label.
    pub plan_seeds: Vec<u64>,
}

impl ExpertDataset {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn push(&mut self, state: Vec<f64>, label: Vec<f64>, executed: Vec<f64>, seed: u64) {
        self.states.push(state);
        self.labels.push(label);
        self.executed.push(executed);
        self.plan_seeds.push(seed);
    }

    pub fn append(&mut self, other: ExpertDataset) {
        self.states.extend(other.states);
        self.labels.extend(other.labels);
        self.executed.extend(other.executed);
        self.plan_seeds.extend(other.plan_seeds);
    }
}

fn to_array(rows: &[Vec<f64>], idx: &[usize]) -> Array2<f64> {
    let w = rows.first().map_or(0, Vec::len);
    Array2::from_shape_fn((idx.len(), w), |(i, j)| rows[idx[i]][j])
}

/// Noise added to the expert's action, `N(0, 0.005)` read as a variance.
pub const EXPERT_NOISE_SIGMA: f64 = 0.070_710_678_118_654_75;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpertConfig {
    pub num_rollouts: usize,
    pub rollout_length: usize,
    pub action_noise_sigma: f64,
}

impl Default for ExpertConfig {
    fn default() -> Self {
        Self {
            num_rollouts: 30,
            rollout_length: 333,
            action_noise_sigma: EXPERT_NOISE_SIGMA,
        }
    }
}

/// MPC rollouts with perturbed execution; returns the dataset and episode returns.
pub fn collect_expert_rollouts<D, R>(
    env: &EnvSpec,
    model: &D,
    reward: &R,
    mpc: &MpcConfig,
    cfg: &ExpertConfig,
    seed: u64,
) -> Result<(ExpertDataset, Vec<f64>)>
where
    D: Dynamics + ?Sized,
    R: Reward + ?Sized,
{
    let mut out = ExpertDataset::default();
    let mut returns = Vec::with_capacity(cfg.num_rollouts);
    for r in 0..cfg.num_rollouts as u64 {
        let s0 = sample_initial_state(env, &mut seeding::rng(seeding::child(seeding::stream(seed, "expert_init"), r)), Exploration::Standard)?;
        let plan = MpcConfig {
            rng_seed: seeding::child(seeding::stream(seed, "expert_plan"), r),
            ..mpc.clone()
        };
        let ep = mpc_run_noisy(
            env,
            model,
            reward,
            &s0,
            cfg.rollout_length,
            &plan,
            cfg.action_noise_sigma,
            seeding::child(seeding::stream(seed, "expert_noise"), r),
        )?;
        returns.push(ep.total_return());
        for (t, tr) in ep.trajectory.transitions().iter().enumerate() {
            out.push(tr.state.clone(), ep.planned_actions[t].clone(), tr.action.clone(), ep.plan_seeds[t]);
        }
    }
    Ok((out, returns))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CloneConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub holdout_fraction: f64,
    /// Fit observation standardization on first use.
    pub normalize_observations: bool,
}

impl Default for CloneConfig {
    fn default() -> Self {
        Self {
            epochs: 70,
            batch_size: 500,
            learning_rate: 1e-4,
            holdout_fraction: 0.1,
            normalize_observations: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CloneReport {
    pub epoch_losses: Vec<f64>,
    /// Mean squared error per action component on the held-out pairs.
    pub heldout_mse: Option<f64>,
    pub train_mse: f64,
}

/// `½ Σ ‖a − μ_φ(s)‖²` over the whole dataset.
pub fn bc_objective(policy: &GaussianPolicy, expert: &ExpertDataset) -> Result<f64> {
    if expert.is_empty() {
        return Err(Error::EmptyDataset("expert dataset"));
    }
    let idx: Vec<usize> = (0..expert.len()).collect();
    let mu = policy.mean_batch(to_array(&expert.states, &idx).view())?;
    let diff = mu - to_array(&expert.labels, &idx);
    Ok(0.5 * diff.mapv(|v| v * v).sum())
}

/// Mean squared action error per component between the policy mean and `labels`.
pub fn action_mse(policy: &GaussianPolicy, states: &[Vec<f64>], labels: &[Vec<f64>]) -> Result<f64> {
    if states.is_empty() {
        return Err(Error::EmptyDataset("no states to score"));
    }
    let idx: Vec<usize> = (0..states.len()).collect();
    let mu = policy.mean_batch(to_array(states, &idx).view())?;
    let diff = mu - to_array(labels, &idx);
    Ok(diff.mapv(|v| v * v).mean().unwrap_or(0.0))
}

/// Adam on the cloning objective; the std is never touched.
pub fn behavioral_clone(
    policy: &mut GaussianPolicy,
    expert: &ExpertDataset,
    cfg: &CloneConfig,
    seed: u64,
) -> Result<CloneReport> {
    if expert.is_empty() {
        return Err(Error::EmptyDataset("expert dataset"));
    }
    if cfg.batch_size == 0 || !(0.0..1.0).contains(&cfg.holdout_fraction) {
        return Err(Error::InvalidArgument("batch_size must be positive and holdout_fraction in [0,1)".into()));
    }
    if expert.states[0].len() != policy.state_dim() || expert.labels[0].len() != policy.action_dim() {
        return Err(Error::dim("expert state", policy.state_dim(), expert.states[0].len()));
    }
    let mut rng = seeding::rng(seed);
    let mut order: Vec<usize> = (0..expert.len()).collect();
    order.shuffle(&mut rng);
    let n_hold = ((cfg.holdout_fraction * expert.len() as f64).round() as usize).min(expert.len() - 1);
    let (hold, train) = order.split_at(n_hold);
    let mut train = train.to_vec();

    if cfg.normalize_observations && policy.obs_norm.is_none() {
        let x = to_array(&expert.states, &train);
        let mean = x.mean_axis(Axis(0)).expect("non-empty").to_vec();
        let std = x.std_axis(Axis(0), 0.0).iter().map(|s| s.max(STD_FLOOR)).collect();
        policy.obs_norm = Some(ObsNorm { mean, std });
    }

    let mut adam = AdamState::new(&policy.mean_net, AdamConfig::with_learning_rate(cfg.learning_rate));
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        train.shuffle(&mut rng);
        let mut sum = 0.0;
        let mut batches = 0;
        for chunk in train.chunks(cfg.batch_size) {
            let x = policy.net_inputs(to_array(&expert.states, chunk).view());
            let y = to_array(&expert.labels, chunk);
            let trace = policy.mean_net.forward_trace(x.view())?;
            let (loss, grad) = half_squared_error(trace.output().view(), y.view());
            let (grads, _) = policy.mean_net.backward_trace(&trace, grad.view())?;
            adam.step(&mut policy.mean_net, &grads)?;
            sum += loss;
            batches += 1;
        }
        epoch_losses.push(sum / batches as f64);
    }
    let pick = |idx: &[usize]| -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        (
            idx.iter().map(|&i| expert.states[i].clone()).collect(),
            idx.iter().map(|&i| expert.labels[i].clone()).collect(),
        )
    };
    let (ts, tl) = pick(&train);
    let train_mse = action_mse(policy, &ts, &tl)?;
    let heldout_mse = if hold.is_empty() {
        None
    } else {
        let (hs, hl) = pick(hold);
        Some(action_mse(policy, &hs, &hl)?)
    };
    Ok(CloneReport {
        epoch_losses,
        heldout_mse,
        train_mse,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DaggerConfig {
    pub iters: usize,
    pub rollouts_per_iter: usize,
    pub rollout_length: usize,
    pub clone: CloneConfig,
}

impl Default for DaggerConfig {
    fn default() -> Self {
        Self {
            iters: 3,
            rollouts_per_iter: 5,
            rollout_length: 333,
            clone: CloneConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DaggerIteration {
    pub iter: usize,
    pub visited_states: usize,
    /// Policy-vs-expert action MSE on the states this iteration visited, before retraining.
    pub on_policy_mse: f64,
    pub clone: CloneReport,
}

/// States visited by the policy mean from seeded initial states.
pub fn visit_states(
    policy: &GaussianPolicy,
    env: &EnvSpec,
    rollouts: usize,
    length: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(rollouts * length);
    for r in 0..rollouts as u64 {
        let s0 = sample_initial_state(env, &mut seeding::rng(seeding::child(seed, r)), Exploration::Standard)?;
        let mut failure = None;
        let traj = rollout_policy(env, s0, length, |s| match policy.mean(s) {
            Ok(a) => a,
            Err(e) => {
                failure.get_or_insert(e);
                vec![0.0; env.action_dim()]
            }
        })?;
        if let Some(e) = failure {
            return Err(e);
        }
        out.extend(traj.transitions().iter().map(|t| t.state.clone()));
    }
    Ok(out)
}

/// Expert labels for `states`; label `i` is planned with seed `child(seed, i)`.
pub fn label_states<D, R>(model: &D, reward: &R, mpc: &MpcConfig, states: &[Vec<f64>], seed: u64) -> Result<ExpertDataset>
where
    D: Dynamics + ?Sized,
    R: Reward + ?Sized,
{
    let labels: Vec<(Vec<f64>, u64)> = states
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let plan_seed = seeding::child(seed, i as u64);
            let cfg = MpcConfig {
                rng_seed: plan_seed,
                ..mpc.clone()
            };
            random_shooting(model, reward, s, &cfg).map(|r| (r.actions.first().to_vec(), plan_seed))
        })
        .collect::<Result<_>>()?;
    let mut out = ExpertDataset::default();
    for (s, (a, seed)) in states.iter().zip(labels) {
        out.push(s.clone(), a.clone(), a, seed);
    }
    Ok(out)
}

/// Roll out the policy mean, relabel visited states with the planner, aggregate, retrain.
#[allow(clippy::too_many_arguments)]
pub fn dagger_iterate<D, R>(
    policy: &mut GaussianPolicy,
    env: &EnvSpec,
    model: &D,
    reward: &R,
    mpc: &MpcConfig,
    expert: &mut ExpertDataset,
    cfg: &DaggerConfig,
    seed: u64,
) -> Result<Vec<DaggerIteration>>
where
    D: Dynamics + ?Sized,
    R: Reward + ?Sized,
{
    let mut out = Vec::with_capacity(cfg.iters);
    for iter in 0..cfg.iters as u64 {
        let visited = visit_states(
            policy,
            env,
            cfg.rollouts_per_iter,
            cfg.rollout_length,
            seeding::child(seeding::stream(seed, "dagger_init"), iter),
        )?;
        let labelled = label_states(
            model,
            reward,
            mpc,
            &visited,
            seeding::child(seeding::stream(seed, "dagger_label"), iter),
        )?;
        let on_policy_mse = action_mse(policy, &labelled.states, &labelled.labels)?;
        let visited_states = labelled.len();
        expert.append(labelled);
        let clone = behavioral_clone(
            policy,
            expert,
            &cfg.clone,
            seeding::child(seeding::stream(seed, "dagger_clone"), iter),
        )?;
        out.push(DaggerIteration {
            iter: iter as usize,
            visited_states,
            on_policy_mse,
            clone,
        });
    }
    Ok(out)
}
