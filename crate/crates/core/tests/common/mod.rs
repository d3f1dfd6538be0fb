//! Test fixtures shared by the integration targets.
#![allow(dead_code)]

use mbrl::dynamics::{Dynamics, Trajectory};
use mbrl::envs::{clip_action, rollout_policy, Environment};
use mbrl::error::Result;
use mbrl::nn::{Activation, Mlp};
use mbrl::seeding::{self, SeedRng};
use ndarray::{Array2, ArrayView2};
use rand::Rng;

/// `s' = s + gain · a` in one dimension; doubles as its own exact model.
#[derive(Debug, Clone, Copy)]
pub struct Toy {
    pub gain: f64,
}

impl Environment for Toy {
    fn state_dim(&self) -> usize {
        1
    }
    fn action_dim(&self) -> usize {
        1
    }
    fn dt(&self) -> f64 {
        1.0
    }
    fn step(&self, s: &[f64], a: &[f64]) -> Vec<f64> {
        vec![s[0] + self.gain * clip_action(a)[0]]
    }
    fn initial_state(&self, _: &mut SeedRng) -> Vec<f64> {
        vec![0.0]
    }
}

impl Dynamics for Toy {
    fn state_dim(&self) -> usize {
        1
    }
    fn action_dim(&self) -> usize {
        1
    }
    fn predict_batch(&self, s: ArrayView2<'_, f64>, a: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        Ok(Array2::from_shape_fn(s.raw_dim(), |(i, _)| s[[i, 0]] + self.gain * a[[i, 0]]))
    }
}

/// Every sequence over `levels` of length `h`, in lexicographic order.
pub fn enumerate_sequences(levels: &[f64], h: usize) -> Vec<Vec<f64>> {
    let k = levels.len().pow(h as u32);
    (0..k)
        .map(|mut code| {
            let mut seq = vec![0.0; h];
            for slot in seq.iter_mut().rev() {
                *slot = levels[code % levels.len()];
                code /= levels.len();
            }
            seq
        })
        .collect()
}

/// Undiscounted return of a scalar action sequence on [`Toy`], by a plain loop.
pub fn toy_return(toy: Toy, s0: f64, seq: &[f64], reward: &dyn Fn(&[f64], &[f64], &[f64]) -> f64) -> f64 {
    let mut s = s0;
    let mut total = 0.0;
    for &a in seq {
        let next = s + toy.gain * a;
        total += reward(&[s], &[a], &[next]);
        s = next;
    }
    total
}

/// `s' = 0.9 s + 0.1 a`, componentwise.
#[derive(Debug, Clone, Copy)]
pub struct DampedLinear {
    pub dim: usize,
}

impl Environment for DampedLinear {
    fn state_dim(&self) -> usize {
        self.dim
    }
    fn action_dim(&self) -> usize {
        self.dim
    }
    fn dt(&self) -> f64 {
        1.0
    }
    fn step(&self, s: &[f64], a: &[f64]) -> Vec<f64> {
        let a = clip_action(a);
        s.iter().zip(&a).map(|(s, a)| 0.9 * s + 0.1 * a).collect()
    }
    fn initial_state(&self, rng: &mut SeedRng) -> Vec<f64> {
        (0..self.dim).map(|_| rng.random_range(-1.0..1.0)).collect()
    }
}

/// `count` uniform-action rollouts of `steps` transitions each.
pub fn damped_rollouts(env: DampedLinear, count: usize, steps: usize, seed: u64) -> Vec<Trajectory> {
    (0..count)
        .map(|i| {
            let mut rng = seeding::rng(seeding::child(seed, i as u64));
            let s0 = env.initial_state(&mut rng);
            rollout_policy(&env, s0, steps, |_| (0..env.dim).map(|_| rng.random_range(-1.0..=1.0)).collect()).unwrap()
        })
        .collect()
}

/// Largest relative error between analytic and central-difference gradients of
/// `⟨g, net(x)⟩` over every parameter. Differences are measured relative to
/// `max(|analytic|, |numeric|, 1e-4)` so that near-zero entries compare absolutely.
pub fn max_gradient_error(net: &Mlp, x: &[f64], g: &[f64], step: f64) -> f64 {
    let objective = |m: &Mlp| m.forward(x).unwrap().iter().zip(g).map(|(o, g)| o * g).sum::<f64>();
    let (grads, _) = net.backward(x, g).unwrap();
    let analytic = grads.flatten();
    let base = net.flat_params();
    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    for (i, a) in analytic.iter().enumerate() {
        let mut p = base.clone();
        p[i] = base[i] + step;
        probe.set_flat_params(&p).unwrap();
        let up = objective(&probe);
        p[i] = base[i] - step;
        probe.set_flat_params(&p).unwrap();
        let down = objective(&probe);
        let numeric = (up - down) / (2.0 * step);
        worst = worst.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-4));
    }
    worst
}

/// The 4-8-8-4 network with seed `seed`, probed at a seeded input and output gradient.
pub fn gradient_check_case(activation: Activation, seed: u64) -> f64 {
    let net = Mlp::init(&[4, 8, 8, 4], activation, seed).unwrap();
    let mut rng = seeding::rng(seeding::stream(seed, "probe"));
    let x: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
    let g: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
    max_gradient_error(&net, &x, &g, 1e-6)
}

/// Model fitted to 1000 [`DampedLinear`] transitions (100 rollouts of 10 steps).
pub fn train_damped(seed: u64, epochs: usize) -> (mbrl::dynamics::DynamicsModel, mbrl::dynamics::TrainReport, Vec<Trajectory>) {
    use mbrl::dynamics::{slice_trajectories, train_dynamics, DynamicsModel, Provenance, Split, TrainConfig, TransitionDataset};
    use mbrl::nn::{AdamConfig, AdamState};
    let env = DampedLinear { dim: 2 };
    let train = damped_rollouts(env, 100, 10, seeding::stream(seed, "data"));
    let d_rand = slice_trajectories(&train, Provenance::Rand).unwrap();
    let d_rl = TransitionDataset::empty(2, 2, Provenance::Rl);
    let mut model = DynamicsModel::new(2, 2, &[32, 32], Activation::Tanh, seeding::stream(seed, "init")).unwrap();
    let mut adam = AdamState::new(&model.net, AdamConfig::with_learning_rate(1e-3));
    let cfg = TrainConfig { epochs, batch_size: 50, split: Split::RAND_ONLY, ..TrainConfig::default() };
    let report = train_dynamics(&mut model, &d_rand, &d_rl, &cfg, &mut adam, seeding::stream(seed, "train")).unwrap();
    (model, report, train)
}

/// Planar model `s' = s + a` with unbounded actions, for hand-built rollouts.
#[derive(Debug, Clone, Copy)]
pub struct Teleport;

impl Dynamics for Teleport {
    fn state_dim(&self) -> usize {
        2
    }
    fn action_dim(&self) -> usize {
        2
    }
    fn predict_batch(&self, s: ArrayView2<'_, f64>, a: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        Ok(&s + &a)
    }
}
