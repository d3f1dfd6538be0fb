//! Random-shooting model predictive control.
//!
//! Candidates are laid out candidate-major and drawn from the RNG in that order,
//! so the first `K1` candidates for a seed are the same for any `K2 >= K1`.
//! Evaluation runs in fixed-size chunks; serial and parallel execution perform
//! identical arithmetic and the argmax keeps the lowest index on ties.

use std::path::Path;

use ndarray::{s, Array2};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::reward::Reward;
use crate::dynamics::{Dynamics, Trajectory, Transition};
use crate::envs::{clip_action, Environment};
use crate::error::{Error, Result};
use crate::seeding;

const CHUNK: usize = 256;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateSampler {
    /// i.i.d. `Uniform[-1, 1]` per dimension per step.
    #[default]
    Uniform,
    /// Lexicographic enumeration of every sequence over the given action levels.
    Grid { levels: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpcConfig {
    pub horizon: usize,
    pub num_candidates: usize,
    pub discount: f64,
    pub rng_seed: u64,
    pub sampler: CandidateSampler,
    /// Evaluate candidate chunks on the rayon pool.
    pub parallel: bool,
}

impl Default for MpcConfig {
    fn default() -> Self {
        Self {
            horizon: 10,
            num_candidates: 1000,
            discount: 1.0,
            rng_seed: 0,
            sampler: CandidateSampler::Uniform,
            parallel: false,
        }
    }
}

impl MpcConfig {
    pub fn new(horizon: usize, num_candidates: usize) -> Self {
        Self {
            horizon,
            num_candidates,
            ..Self::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::InvalidArgument("MPC horizon must be >= 1".into()));
        }
        if self.num_candidates == 0 {
            return Err(Error::InvalidArgument("MPC needs at least one candidate".into()));
        }
        if !(0.0..=1.0).contains(&self.discount) {
            return Err(Error::InvalidArgument(format!("discount must lie in [0,1], got {}", self.discount)));
        }
        if let CandidateSampler::Grid { levels } = &self.sampler {
            if levels.is_empty() || levels.iter().any(|l| !(-1.0..=1.0).contains(l)) {
                return Err(Error::InvalidArgument("grid levels must be non-empty and within [-1,1]".into()));
            }
        }
        Ok(())
    }
}

/// `H` actions, each within `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSequence(pub Vec<Vec<f64>>);

impl ActionSequence {
    pub fn first(&self) -> &[f64] {
        &self.0[0]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShootingResult {
    pub actions: ActionSequence,
    pub predicted_return: f64,
    pub best_index: usize,
    /// Candidates whose predicted return was non-finite and scored `-inf`.
    pub nonfinite_candidates: usize,
}

/// Candidate array of shape `(K, H * m)`.
pub fn sample_candidates(cfg: &MpcConfig, action_dim: usize) -> Result<Array2<f64>> {
    cfg.validate()?;
    let width = cfg.horizon * action_dim;
    match &cfg.sampler {
        CandidateSampler::Uniform => {
            let mut rng = seeding::rng(cfg.rng_seed);
            Ok(Array2::from_shape_simple_fn((cfg.num_candidates, width), || {
                rng.random_range(-1.0..=1.0)
            }))
        }
        CandidateSampler::Grid { levels } => {
            let total = (levels.len() as f64).powi(width as i32);
            if cfg.num_candidates as f64 > total {
                return Err(Error::InvalidArgument(format!(
                    "grid sampler has only {total} sequences, {} requested",
                    cfg.num_candidates
                )));
            }
            let base = levels.len();
            let mut out = Array2::zeros((cfg.num_candidates, width));
            for k in 0..cfg.num_candidates {
                let mut rem = k;
                for col in (0..width).rev() {
                    out[[k, col]] = levels[rem % base];
                    rem /= base;
                }
            }
            Ok(out)
        }
    }
}

/// Discounted predicted returns of all candidates from `state`.
pub fn evaluate_candidates<D, R>(
    model: &D,
    reward: &R,
    state: &[f64],
    candidates: &Array2<f64>,
    cfg: &MpcConfig,
) -> Result<Vec<f64>>
where
    D: Dynamics + ?Sized,
    R: Reward + ?Sized,
{
    let n = model.state_dim();
    let m = model.action_dim();
    if state.len() != n {
        return Err(Error::dim("planner state", n, state.len()));
    }
    if candidates.ncols() != cfg.horizon * m {
        return Err(Error::dim("candidate width", cfg.horizon * m, candidates.ncols()));
    }
    let chunk_returns = |start: usize| -> Result<Vec<f64>> {
        let end = (start + CHUNK).min(candidates.nrows());
        let rows = end - start;
        let mut states = Array2::from_shape_fn((rows, n), |(_, j)| state[j]);
        let mut returns = vec![0.0; rows];
        let mut weight = 1.0;
        for h in 0..cfg.horizon {
            let actions = candidates.slice(s![start..end, h * m..(h + 1) * m]);
            let next = model.predict_batch(states.view(), actions)?;
            for (i, ret) in returns.iter_mut().enumerate() {
                let s = states.row(i);
                let a = actions.row(i);
                let sn = next.row(i);
                let r = reward.reward(
                    s.as_slice().expect("owned rows are contiguous"),
                    &a.to_vec(),
                    sn.as_slice().expect("owned rows are contiguous"),
                );
                *ret += weight * r;
            }
            weight *= cfg.discount;
            states = next;
        }
        Ok(returns)
    };
    let starts: Vec<usize> = (0..candidates.nrows()).step_by(CHUNK).collect();
    let chunks: Vec<Vec<f64>> = if cfg.parallel {
        starts.par_iter().map(|&s| chunk_returns(s)).collect::<Result<_>>()?
    } else {
        starts.iter().map(|&s| chunk_returns(s)).collect::<Result<_>>()?
    };
    Ok(chunks.into_iter().flatten().collect())
}

/// Picks the candidate with the highest discounted predicted return.
pub fn random_shooting<D, R>(model: &D, reward: &R, state: &[f64], cfg: &MpcConfig) -> Result<ShootingResult>
where
    D: Dynamics + ?Sized,
    R: Reward + ?Sized,
{
    let m = model.action_dim();
    let candidates = sample_candidates(cfg, m)?;
    let returns = evaluate_candidates(model, reward, state, &candidates, cfg)?;
    let mut nonfinite = 0;
    let mut best = 0;
    let mut best_return = f64::NEG_INFINITY;
    for (k, &r) in returns.iter().enumerate() {
        let r = if r.is_finite() {
            r
        } else {
            nonfinite += 1;
            f64::NEG_INFINITY
        };
        if r > best_return || (k == 0 && r == f64::NEG_INFINITY) {
            best = k;
            best_return = r;
        }
    }
    let row = candidates.row(best);
    let actions = (0..cfg.horizon)
        .map(|h| row.slice(s![h * m..(h + 1) * m]).to_vec())
        .collect();
    Ok(ShootingResult {
        actions: ActionSequence(actions),
        predicted_return: best_return,
        best_index: best,
        nonfinite_candidates: nonfinite,
    })
}

/// Receding-horizon episode in the true environment.
#[derive(Debug, Clone, PartialEq)]
pub struct MpcEpisode {
    pub trajectory: Trajectory,
    /// First action of each chosen plan, before any exploration noise.
    pub planned_actions: Vec<Vec<f64>>,
    /// Seed of the planning call at each step.
    pub plan_seeds: Vec<u64>,
    pub rewards: Vec<f64>,
    pub predicted_returns: Vec<f64>,
    pub nonfinite_candidates: usize,
}

impl MpcEpisode {
    pub fn total_return(&self) -> f64 {
        self.rewards.iter().sum()
    }

    pub fn states(&self) -> Vec<Vec<f64>> {
        self.trajectory.states()
    }
}

/// Seed of the planning call at step `t` of an episode planned with `cfg`.
pub fn plan_seed(cfg: &MpcConfig, t: usize) -> u64 {
    seeding::child(cfg.rng_seed, t as u64)
}

/// Plans, executes the first action, observes the true next state, replans.
pub fn mpc_run<E, D, R>(env: &E, model: &D, reward: &R, s0: &[f64], steps: usize, cfg: &MpcConfig) -> Result<MpcEpisode>
where
    E: Environment + ?Sized,
    D: Dynamics + ?Sized,
    R: Reward + ?Sized,
{
    mpc_run_noisy(env, model, reward, s0, steps, cfg, 0.0, 0)
}

/// [`mpc_run`] with `N(0, sigma²)` added to each executed action (then clipped).
#[allow(clippy::too_many_arguments)]
pub fn mpc_run_noisy<E, D, R>(
    env: &E,
    model: &D,
    reward: &R,
    s0: &[f64],
    steps: usize,
    cfg: &MpcConfig,
    action_noise_sigma: f64,
    noise_seed: u64,
) -> Result<MpcEpisode>
where
    E: Environment + ?Sized,
    D: Dynamics + ?Sized,
    R: Reward + ?Sized,
{
    if steps == 0 {
        return Err(Error::InvalidArgument("episode length must be >= 1".into()));
    }
    if !(action_noise_sigma >= 0.0) {
        return Err(Error::InvalidArgument("action noise sigma must be >= 0".into()));
    }
    if env.state_dim() != model.state_dim() || env.action_dim() != model.action_dim() {
        return Err(Error::dim("model vs environment state dim", env.state_dim(), model.state_dim()));
    }
    let normal = (action_noise_sigma > 0.0)
        .then(|| Normal::new(0.0, action_noise_sigma).expect("sigma checked"));
    let mut noise_rng = seeding::rng(noise_seed);
    let mut s = s0.to_vec();
    let mut transitions = Vec::with_capacity(steps);
    let mut ep = MpcEpisode {
        trajectory: Trajectory::default(),
        planned_actions: Vec::with_capacity(steps),
        plan_seeds: Vec::with_capacity(steps),
        rewards: Vec::with_capacity(steps),
        predicted_returns: Vec::with_capacity(steps),
        nonfinite_candidates: 0,
    };
    for t in 0..steps {
        let mut step_cfg = cfg.clone();
        step_cfg.rng_seed = plan_seed(cfg, t);
        let plan = random_shooting(model, reward, &s, &step_cfg)?;
        let planned = plan.actions.first().to_vec();
        let executed = match &normal {
            Some(n) => clip_action(&planned.iter().map(|a| a + n.sample(&mut noise_rng)).collect::<Vec<_>>()),
            None => planned.clone(),
        };
        let next = env.step(&s, &executed);
        ep.rewards.push(reward.reward(&s, &executed, &next));
        ep.predicted_returns.push(plan.predicted_return);
        ep.nonfinite_candidates += plan.nonfinite_candidates;
        ep.planned_actions.push(planned);
        ep.plan_seeds.push(step_cfg.rng_seed);
        transitions.push(Transition {
            state: s,
            action: executed,
            next_state: next.clone(),
            dt: env.dt(),
        });
        s = next;
    }
    ep.trajectory = Trajectory::new(transitions)?;
    Ok(ep)
}

/// Episode log: `t, s_0.., a_0.., reward, predicted_return`.
pub fn write_episode_csv(path: &Path, ep: &MpcEpisode) -> Result<()> {
    let ts = ep.trajectory.transitions();
    let (n, m) = match ts.first() {
        Some(t) => (t.state.len(), t.action.len()),
        None => return Err(Error::EmptyDataset("episode has no steps")),
    };
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["t".to_string()];
    header.extend((0..n).map(|i| format!("s_{i}")));
    header.extend((0..m).map(|i| format!("a_{i}")));
    header.push("reward".into());
    header.push("predicted_return".into());
    w.write_record(&header)?;
    for (t, tr) in ts.iter().enumerate() {
        let mut rec = vec![t.to_string()];
        rec.extend(tr.state.iter().map(|v| v.to_string()));
        rec.extend(tr.action.iter().map(|v| v.to_string()));
        rec.push(ep.rewards[t].to_string());
        rec.push(ep.predicted_returns[t].to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::ZeroReward;
    use crate::dynamics::rollout_open_loop;
    use crate::seeding::SeedRng;
    use ndarray::ArrayView2;

    /// `s' = s + B a` with a fixed gain matrix.
    struct Linear {
        gain: Vec<Vec<f64>>,
    }

    impl Dynamics for Linear {
        fn state_dim(&self) -> usize {
            self.gain.len()
        }
        fn action_dim(&self) -> usize {
            self.gain[0].len()
        }
        fn predict_batch(&self, s: ArrayView2<'_, f64>, a: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
            let mut out = s.to_owned();
            for (mut row, act) in out.rows_mut().into_iter().zip(a.rows()) {
                for (i, g) in self.gain.iter().enumerate() {
                    row[i] += g.iter().zip(act.iter()).map(|(g, a)| g * a).sum::<f64>();
                }
            }
            Ok(out)
        }
    }

    impl Environment for Linear {
        fn state_dim(&self) -> usize {
            self.gain.len()
        }
        fn action_dim(&self) -> usize {
            self.gain[0].len()
        }
        fn dt(&self) -> f64 {
            1.0
        }
        fn step(&self, s: &[f64], a: &[f64]) -> Vec<f64> {
            let a = clip_action(a);
            self.gain
                .iter()
                .zip(s)
                .map(|(g, s)| s + g.iter().zip(&a).map(|(g, a)| g * a).sum::<f64>())
                .collect()
        }
        fn initial_state(&self, _: &mut SeedRng) -> Vec<f64> {
            vec![0.0; self.gain.len()]
        }
    }

    fn toy() -> Linear {
        Linear { gain: vec![vec![0.25]] }
    }

    fn grid(h: usize, k: usize) -> MpcConfig {
        MpcConfig {
            horizon: h,
            num_candidates: k,
            sampler: CandidateSampler::Grid { levels: vec![-1.0, 1.0] },
            ..MpcConfig::default()
        }
    }

    #[test]
    fn discrete_toy_receding_horizon_is_optimal() {
        let reward = |_: &[f64], _: &[f64], sn: &[f64]| -(sn[0] - 0.6).powi(2);
        let env = toy();
        let ep = mpc_run(&env, &env, &reward, &[0.0], 3, &grid(3, 8)).unwrap();
        assert_eq!(ep.trajectory.actions(), vec![vec![1.0]; 3]);
        let best = -(0.35f64.powi(2) + 0.1f64.powi(2) + 0.15f64.powi(2));
        assert!((ep.total_return() - best).abs() < 1e-12);
        assert!((ep.predicted_returns[0] - best).abs() < 1e-12);
    }

    #[test]
    fn grid_enumerates_lexicographically() {
        let c = sample_candidates(&grid(2, 4), 1).unwrap();
        assert_eq!(c, ndarray::array![[-1.0, -1.0], [-1.0, 1.0], [1.0, -1.0], [1.0, 1.0]]);
        assert!(sample_candidates(&grid(2, 5), 1).is_err());
    }

    #[test]
    fn matches_brute_force_on_random_instances() {
        let mut rng = seeding::rng(99);
        for _ in 0..100 {
            let gain: Vec<Vec<f64>> = (0..2).map(|_| (0..2).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            let target: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
            let cost = rng.random_range(0.0..0.5);
            let model = Linear { gain };
            let reward = move |_: &[f64], a: &[f64], sn: &[f64]| {
                -sn.iter().zip(&target).map(|(s, t)| (s - t).powi(2)).sum::<f64>() - cost * a.iter().map(|a| a * a).sum::<f64>()
            };
            let levels = vec![-1.0, 0.0, 1.0];
            let cfg = MpcConfig {
                horizon: 2,
                num_candidates: 81,
                sampler: CandidateSampler::Grid { levels: levels.clone() },
                ..MpcConfig::default()
            };
            let s0 = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let got = random_shooting(&model, &reward, &s0, &cfg).unwrap();

            let mut best = f64::NEG_INFINITY;
            for code in 0..81usize {
                let d = [code / 27, (code / 9) % 3, (code / 3) % 3, code % 3];
                let acts = vec![vec![levels[d[0]], levels[d[1]]], vec![levels[d[2]], levels[d[3]]]];
                let states = rollout_open_loop(&model, &s0, &acts).unwrap();
                let mut prev = s0.to_vec();
                let mut total = 0.0;
                for (s, a) in states.iter().zip(&acts) {
                    total += reward(&prev, a, s);
                    prev = s.clone();
                }
                best = best.max(total);
            }
            assert!((got.predicted_return - best).abs() < 1e-12);
        }
    }

    #[test]
    fn smaller_candidate_sets_are_prefixes() {
        let small = sample_candidates(&MpcConfig::new(5, 50).with_seed(7), 3).unwrap();
        let large = sample_candidates(&MpcConfig::new(5, 600).with_seed(7), 3).unwrap();
        assert_eq!(small, large.slice(s![..50, ..]));
        assert!(large.iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn parallel_equals_serial() {
        let model = Linear { gain: vec![vec![0.3, -0.1], vec![0.05, 0.2]] };
        let reward = |_: &[f64], a: &[f64], sn: &[f64]| (sn[0] * 3.0).sin() - sn[1].powi(2) - 0.01 * a[0].abs();
        let serial = MpcConfig::new(8, 1500).with_seed(3);
        let parallel = MpcConfig { parallel: true, ..serial.clone() };
        let cands = sample_candidates(&serial, 2).unwrap();
        let a = evaluate_candidates(&model, &reward, &[0.1, 0.2], &cands, &serial).unwrap();
        let b = evaluate_candidates(&model, &reward, &[0.1, 0.2], &cands, &parallel).unwrap();
        assert_eq!(a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        assert_eq!(
            random_shooting(&model, &reward, &[0.1, 0.2], &serial).unwrap(),
            random_shooting(&model, &reward, &[0.1, 0.2], &parallel).unwrap()
        );
    }

    #[test]
    fn ties_choose_first_candidate() {
        let r = random_shooting(&toy(), &ZeroReward, &[0.0], &MpcConfig::new(3, 40)).unwrap();
        assert_eq!(r.best_index, 0);
        assert_eq!(r.predicted_return, 0.0);
    }

    #[test]
    fn nonfinite_returns_are_never_chosen() {
        let reward = |_: &[f64], a: &[f64], _: &[f64]| if a[0] > 0.0 { f64::NAN } else { a[0] };
        let r = random_shooting(&toy(), &reward, &[0.0], &MpcConfig::new(1, 200).with_seed(1)).unwrap();
        assert!(r.nonfinite_candidates > 50);
        assert!(r.actions.first()[0] <= 0.0);
        let all_bad = |_: &[f64], _: &[f64], _: &[f64]| f64::INFINITY;
        let r = random_shooting(&toy(), &all_bad, &[0.0], &MpcConfig::new(1, 10)).unwrap();
        assert_eq!((r.best_index, r.nonfinite_candidates), (0, 10));
        assert_eq!(r.predicted_return, f64::NEG_INFINITY);
    }

    #[test]
    fn zero_discount_is_myopic() {
        // Going up pays now, going down pays at step two.
        let reward = |s: &[f64], _: &[f64], sn: &[f64]| if s[0] == 0.0 { sn[0] } else { -10.0 * sn[0] };
        let mut cfg = grid(2, 4);
        cfg.discount = 0.0;
        assert_eq!(random_shooting(&toy(), &reward, &[0.0], &cfg).unwrap().actions.first(), &[1.0]);
        cfg.discount = 1.0;
        assert_eq!(random_shooting(&toy(), &reward, &[0.0], &cfg).unwrap().actions.first(), &[-1.0]);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let reward = |_: &[f64], _: &[f64], sn: &[f64]| sn[0];
        let cfg = MpcConfig::new(4, 300).with_seed(11);
        let a = mpc_run(&toy(), &toy(), &reward, &[0.0], 5, &cfg).unwrap();
        let b = mpc_run(&toy(), &toy(), &reward, &[0.0], 5, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.plan_seeds.len(), 5);
        assert_ne!(a.plan_seeds[0], a.plan_seeds[1]);
    }

    #[test]
    fn noisy_run_keeps_planned_actions_separate() {
        let reward = |_: &[f64], _: &[f64], sn: &[f64]| sn[0];
        let cfg = MpcConfig::new(2, 50).with_seed(2);
        let clean = mpc_run(&toy(), &toy(), &reward, &[0.0], 4, &cfg).unwrap();
        let noisy = mpc_run_noisy(&toy(), &toy(), &reward, &[0.0], 4, &cfg, 0.1, 5).unwrap();
        assert_eq!(clean.planned_actions[0], noisy.planned_actions[0]);
        assert_ne!(clean.trajectory.actions()[0], noisy.trajectory.actions()[0]);
        assert!(noisy.trajectory.actions().iter().flatten().all(|a| (-1.0..=1.0).contains(a)));
    }

    #[test]
    fn config_validation() {
        assert!(MpcConfig::new(0, 10).validate().is_err());
        assert!(MpcConfig::new(2, 0).validate().is_err());
        assert!(MpcConfig { discount: 1.5, ..MpcConfig::default() }.validate().is_err());
        let bad = MpcConfig { sampler: CandidateSampler::Grid { levels: vec![2.0] }, ..MpcConfig::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn episode_csv_has_expected_columns() {
        let reward = |_: &[f64], _: &[f64], sn: &[f64]| sn[0];
        let ep = mpc_run(&toy(), &toy(), &reward, &[0.0], 3, &MpcConfig::new(2, 20)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("ep.csv");
        write_episode_csv(&f, &ep).unwrap();
        let text = std::fs::read_to_string(&f).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,s_0,a_0,reward,predicted_return");
        assert_eq!(lines.count(), 3);
    }
}
