//! Score-function policy-gradient fine-tuning with a mean-return baseline.
//!
//! Each iteration samples a batch of fixed-length episodes with the stochastic
//! policy, weights each episode's log-likelihood gradient by its return minus the
//! batch mean return, and takes one Adam ascent step on the mean network. The
//! score uses the unclipped sample; the environment sees the clipped action.

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::Reward;
use crate::envs::{clip_action, Environment};
use crate::error::{Error, Result};
use crate::imitation::GaussianPolicy;
use crate::nn::{AdamConfig, AdamState, Gradients};
use crate::seeding;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FinetuneConfig {
    pub iterations: usize,
    pub batch_episodes: usize,
    pub episode_length: usize,
    pub learning_rate: f64,
}

impl Default for FinetuneConfig {
    fn default() -> Self {
        Self {
            iterations: 100,
            batch_episodes: 10,
            episode_length: 100,
            learning_rate: 1e-3,
        }
    }
}

impl FinetuneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_episodes == 0 || self.episode_length == 0 {
            return Err(Error::InvalidArgument("fine-tuning needs episodes of positive length".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument("learning_rate must be finite and >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FinetuneIteration {
    pub iter: usize,
    /// Mean return of the batch sampled at this iteration, before its update.
    pub mean_return: f64,
    /// Fine-tuning environment steps including this iteration's batch.
    pub env_steps_cumulative: usize,
    pub grad_norm: f64,
}

struct Episode {
    states: Vec<Vec<f64>>,
    raw_actions: Vec<Vec<f64>>,
    ret: f64,
}

fn sample_episode<E, R>(policy: &GaussianPolicy, env: &E, reward: &R, steps: usize, seed: u64) -> Result<Episode>
where
    E: Environment + ?Sized,
    R: Reward + ?Sized,
{
    let mut rng = seeding::rng(seed);
    let mut s = env.initial_state(&mut rng);
    let mut ep = Episode {
        states: Vec::with_capacity(steps),
        raw_actions: Vec::with_capacity(steps),
        ret: 0.0,
    };
    for _ in 0..steps {
        let raw = policy.sample(&s, &mut rng)?;
        let a = clip_action(&raw);
        let next = env.step(&s, &a);
        ep.ret += reward.reward(&s, &a, &next);
        ep.states.push(std::mem::replace(&mut s, next));
        ep.raw_actions.push(raw);
    }
    Ok(ep)
}

/// Runs `cfg.iterations` updates in place; episodes are sampled in parallel and
/// gradients are reduced in episode order, so results do not depend on threads.
pub fn policy_gradient_finetune<E, R>(
    policy: &mut GaussianPolicy,
    env: &E,
    reward: &R,
    cfg: &FinetuneConfig,
    seed: u64,
) -> Result<Vec<FinetuneIteration>>
where
    E: Environment + ?Sized,
    R: Reward + ?Sized,
{
    cfg.validate()?;
    if env.state_dim() != policy.state_dim() || env.action_dim() != policy.action_dim() {
        return Err(Error::dim("policy vs environment state", env.state_dim(), policy.state_dim()));
    }
    let mut adam = AdamState::new(&policy.mean_net, AdamConfig::with_learning_rate(cfg.learning_rate));
    let mut log = Vec::with_capacity(cfg.iterations);
    let mut steps = 0;
    let base = seeding::stream(seed, "finetune");
    for iter in 0..cfg.iterations {
        let iter_seed = seeding::child(base, iter as u64);
        let snapshot = &*policy;
        let episodes: Vec<Episode> = (0..cfg.batch_episodes)
            .into_par_iter()
            .map(|e| sample_episode(snapshot, env, reward, cfg.episode_length, seeding::child(iter_seed, e as u64)))
            .collect::<Result<_>>()?;
        steps += cfg.batch_episodes * cfg.episode_length;
        let n = episodes.len() as f64;
        let baseline = episodes.iter().map(|e| e.ret).sum::<f64>() / n;

        // Minimizes −(1/N) Σ_i (G_i − b) Σ_t log π(a_t | s_t).
        let mut total = Gradients::zeros_like(&policy.mean_net);
        let m = policy.action_dim();
        for ep in &episodes {
            let rows = ep.states.len();
            let x = Array2::from_shape_fn((rows, policy.state_dim()), |(i, j)| ep.states[i][j]);
            let trace = policy.mean_net.forward_trace(policy.net_inputs(x.view()).view())?;
            let mu = trace.output();
            let weight = -(ep.ret - baseline) / n;
            let out_grad = Array2::from_shape_fn((rows, m), |(t, j)| {
                weight * (ep.raw_actions[t][j] - mu[[t, j]]) / policy.std[j].powi(2)
            });
            let (g, _) = policy.mean_net.backward_trace(&trace, out_grad.view())?;
            total.add_assign(&g);
        }
        if !total.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite policy gradient at iteration {iter} (baseline {baseline})"
            )));
        }
        let grad_norm = total.flatten().iter().map(|v| v * v).sum::<f64>().sqrt();
        adam.step(&mut policy.mean_net, &total)?;
        log.push(FinetuneIteration {
            iter,
            mean_return: baseline,
            env_steps_cumulative: steps,
            grad_norm,
        });
    }
    Ok(log)
}

/// Environment steps until the return first reaches `fraction` of the final
/// return, where "final" is the mean over the last `tail` iterations. A
/// non-positive final return is used directly as the threshold.
pub fn steps_to_fraction_of_final(log: &[FinetuneIteration], fraction: f64, tail: usize) -> Option<usize> {
    if log.is_empty() {
        return None;
    }
    let tail = tail.clamp(1, log.len());
    let last = &log[log.len() - tail..];
    let final_return = last.iter().map(|l| l.mean_return).sum::<f64>() / tail as f64;
    let threshold = if final_return > 0.0 { fraction * final_return } else { final_return };
    log.iter()
        .find(|l| l.mean_return >= threshold)
        .map(|l| l.env_steps_cumulative)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::SeedRng;

    /// One-step bandit with a constant observation.
    struct Bandit;

    impl Environment for Bandit {
        fn state_dim(&self) -> usize {
            1
        }
        fn action_dim(&self) -> usize {
            1
        }
        fn dt(&self) -> f64 {
            1.0
        }
        fn step(&self, s: &[f64], _: &[f64]) -> Vec<f64> {
            s.to_vec()
        }
        fn initial_state(&self, _: &mut SeedRng) -> Vec<f64> {
            vec![1.0]
        }
    }

    fn bandit_reward(_: &[f64], a: &[f64], _: &[f64]) -> f64 {
        -(a[0] - 0.3).powi(2)
    }

    #[test]
    fn zero_learning_rate_keeps_policy() {
        let mut p = GaussianPolicy::new(1, 1, &[8], 1.0, 0).unwrap();
        let before = p.clone();
        let cfg = FinetuneConfig { iterations: 5, batch_episodes: 4, episode_length: 1, learning_rate: 0.0 };
        let log = policy_gradient_finetune(&mut p, &Bandit, &bandit_reward, &cfg, 0).unwrap();
        assert_eq!(p, before);
        assert_eq!(log.len(), 5);
        assert!(log.iter().all(|l| l.mean_return.is_finite()));
        assert_eq!(log[4].env_steps_cumulative, 20);
    }

    #[test]
    fn bandit_mean_converges_to_optimum() {
        let mut p = GaussianPolicy::new(1, 1, &[8], 0.2, 1).unwrap();
        let cfg = FinetuneConfig { iterations: 500, batch_episodes: 16, episode_length: 1, learning_rate: 0.01 };
        policy_gradient_finetune(&mut p, &Bandit, &bandit_reward, &cfg, 2).unwrap();
        let mu = p.mean(&[1.0]).unwrap()[0];
        assert!((mu - 0.3).abs() < 0.1, "{mu}");
    }

    #[test]
    fn deterministic() {
        let cfg = FinetuneConfig { iterations: 10, batch_episodes: 8, episode_length: 1, learning_rate: 0.01 };
        let mut a = GaussianPolicy::new(1, 1, &[4], 0.5, 3).unwrap();
        let mut b = a.clone();
        let la = policy_gradient_finetune(&mut a, &Bandit, &bandit_reward, &cfg, 7).unwrap();
        let lb = policy_gradient_finetune(&mut b, &Bandit, &bandit_reward, &cfg, 7).unwrap();
        assert_eq!(la, lb);
        assert_eq!(a, b);
    }

    #[test]
    fn steps_to_fraction() {
        let mk = |r: &[f64]| -> Vec<FinetuneIteration> {
            r.iter()
                .enumerate()
                .map(|(i, &mean_return)| FinetuneIteration { iter: i, mean_return, env_steps_cumulative: 10 * (i + 1), grad_norm: 0.0 })
                .collect()
        };
        assert_eq!(steps_to_fraction_of_final(&mk(&[0.0, 5.0, 8.5, 10.0, 10.0]), 0.8, 2), Some(30));
        assert_eq!(steps_to_fraction_of_final(&mk(&[9.0, 10.0, 10.0]), 0.8, 2), Some(10));
        assert_eq!(steps_to_fraction_of_final(&mk(&[-5.0, -2.0, -1.0]), 0.8, 1), Some(30));
        assert_eq!(steps_to_fraction_of_final(&[], 0.8, 1), None);
    }
}
