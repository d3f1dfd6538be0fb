use serde::{Deserialize, Serialize};

use crate::envs::{reward_forward, EnvSpec, ForwardRewardParams};

/// Reward of a single transition `(s, a, s')`.
///
/// Planning sums (discounted) transition rewards along predicted rollouts, so a
/// reward may depend on both ends of the transition.
pub trait Reward: Sync {
    fn reward(&self, state: &[f64], action: &[f64], next_state: &[f64]) -> f64;
}

impl<F> Reward for F
where
    F: Fn(&[f64], &[f64], &[f64]) -> f64 + Sync,
{
    fn reward(&self, state: &[f64], action: &[f64], next_state: &[f64]) -> f64 {
        self(state, action, next_state)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroReward;

impl Reward for ZeroReward {
    fn reward(&self, _: &[f64], _: &[f64], _: &[f64]) -> f64 {
        0.0
    }
}

/// Move forward as fast as possible: `s'^xvel − c‖a/d‖²`.
#[derive(Debug, Clone, Copy)]
pub struct ForwardReward {
    pub env: EnvSpec,
    pub params: ForwardRewardParams,
}

impl Reward for ForwardReward {
    fn reward(&self, _: &[f64], action: &[f64], next_state: &[f64]) -> f64 {
        reward_forward(&self.env, self.params, next_state, action)
    }
}

/// Reach a planar goal: `−‖p' − goal‖ − c‖a‖²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NavigateReward {
    pub goal: [f64; 2],
    pub action_cost: f64,
    pub x_index: usize,
    pub y_index: usize,
}

impl NavigateReward {
    pub fn distance(&self, s: &[f64]) -> f64 {
        (s[self.x_index] - self.goal[0]).hypot(s[self.y_index] - self.goal[1])
    }
}

impl Reward for NavigateReward {
    fn reward(&self, _: &[f64], action: &[f64], next_state: &[f64]) -> f64 {
        let cost: f64 = action.iter().map(|a| a * a).sum();
        -self.distance(next_state) - self.action_cost * cost
    }
}

/// Pendulum swing-up: `−(1 + cos θ') − c‖a‖²`, maximal when inverted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UprightReward {
    pub action_cost: f64,
}

impl Reward for UprightReward {
    fn reward(&self, _: &[f64], action: &[f64], next_state: &[f64]) -> f64 {
        let cost: f64 = action.iter().map(|a| a * a).sum();
        -(1.0 + next_state[0].cos()) - self.action_cost * cost
    }
}
