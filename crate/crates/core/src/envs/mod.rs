//! Deterministic analytic environments with known reward functions.
//!
//! Every environment integrates with semi-implicit Euler (velocity first, then
//! position from the updated velocity). Actions are clipped to `[-1, 1]` before
//! integration.
//!
//! | env          | state                     | action              |
//! |--------------|---------------------------|---------------------|
//! | `PointMass2D`| `(x, y, vx, vy)`          | `(fx, fy)`          |
//! | `Unicycle`   | `(x, y, heading, speed)`  | `(accel, turn)`     |
//! | `Pendulum`   | `(theta, theta_dot)`      | `(torque)`          |
//!
//! The pendulum angle is measured from the hanging position.

mod rollout;

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dynamics::Transition;
use crate::error::{Error, Result};
use crate::seeding::SeedRng;

pub use rollout::{collect_random_rollouts, rollout_policy};

/// A discrete-time system with bounded actions.
pub trait Environment: Sync {
    fn state_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    fn dt(&self) -> f64;
    /// Next state; actions outside `[-1, 1]` are clipped first.
    fn step(&self, state: &[f64], action: &[f64]) -> Vec<f64>;
    /// Starting state for an episode.
    fn initial_state(&self, rng: &mut SeedRng) -> Vec<f64>;

    fn transition(&self, state: &[f64], action: &[f64]) -> Transition {
        let action = clip_action(action);
        let next_state = self.step(state, &action);
        Transition {
            state: state.to_vec(),
            action,
            next_state,
            dt: self.dt(),
        }
    }
}

impl<E: Environment + ?Sized> Environment for &E {
    fn state_dim(&self) -> usize {
        (**self).state_dim()
    }
    fn action_dim(&self) -> usize {
        (**self).action_dim()
    }
    fn dt(&self) -> f64 {
        (**self).dt()
    }
    fn step(&self, state: &[f64], action: &[f64]) -> Vec<f64> {
        (**self).step(state, action)
    }
    fn initial_state(&self, rng: &mut SeedRng) -> Vec<f64> {
        (**self).initial_state(rng)
    }
}

pub fn clip_action(action: &[f64]) -> Vec<f64> {
    action.iter().map(|a| a.clamp(-1.0, 1.0)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exploration {
    #[default]
    Standard,
    /// Additionally offsets the heading by `Uniform(-pi, pi)`.
    HeadingSweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PointMassParams {
    pub mass: f64,
    /// Force applied at `|a| = 1`.
    pub force_scale: f64,
    /// Linear drag coefficient.
    pub drag: f64,
}

impl Default for PointMassParams {
    fn default() -> Self {
        Self {
            mass: 1.0,
            force_scale: 1.0,
            drag: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UnicycleParams {
    /// Longitudinal acceleration at `|a0| = 1`.
    pub accel_scale: f64,
    /// Heading rate (rad/s) at `|a1| = 1`.
    pub turn_rate: f64,
    pub drag: f64,
}

impl Default for UnicycleParams {
    fn default() -> Self {
        Self {
            accel_scale: 1.0,
            turn_rate: 1.5,
            drag: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PendulumParams {
    pub mass: f64,
    pub length: f64,
    pub gravity: f64,
    pub damping: f64,
    pub max_torque: f64,
    /// Integrator sub-steps per environment step.
    pub substeps: usize,
}

impl Default for PendulumParams {
    fn default() -> Self {
        Self {
            mass: 1.0,
            length: 1.0,
            gravity: 9.81,
            damping: 0.0,
            max_torque: 2.0,
            substeps: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EnvKind {
    PointMass2D(PointMassParams),
    Unicycle(UnicycleParams),
    Pendulum(PendulumParams),
}

/// An environment instance: dynamics constants plus time step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvSpec {
    pub kind: EnvKind,
    pub dt: f64,
    /// Variance of the Gaussian perturbation on the nominal start state.
    pub init_noise_variance: f64,
}

/// Default start-state noise variance, `N(0, 0.001)`.
pub const INIT_NOISE_VARIANCE: f64 = 0.001;

impl EnvSpec {
    pub fn new(kind: EnvKind, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
        }
        Ok(Self {
            kind,
            dt,
            init_noise_variance: INIT_NOISE_VARIANCE,
        })
    }

    pub fn point_mass() -> Self {
        Self::new(EnvKind::PointMass2D(PointMassParams::default()), 0.05).unwrap()
    }

    pub fn unicycle() -> Self {
        Self::new(EnvKind::Unicycle(UnicycleParams::default()), 0.1).unwrap()
    }

    pub fn pendulum() -> Self {
        Self::new(EnvKind::Pendulum(PendulumParams::default()), 0.05).unwrap()
    }

    pub fn with_init_noise_variance(mut self, variance: f64) -> Self {
        self.init_noise_variance = variance;
        self
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            EnvKind::PointMass2D(_) => "point_mass",
            EnvKind::Unicycle(_) => "unicycle",
            EnvKind::Pendulum(_) => "pendulum",
        }
    }

    pub fn nominal_state(&self) -> Vec<f64> {
        vec![0.0; self.state_dim()]
    }

    /// Indices of position-like components (perturbed at reset).
    pub fn position_indices(&self) -> &'static [usize] {
        match self.kind {
            EnvKind::PointMass2D(_) => &[0, 1],
            EnvKind::Unicycle(_) => &[0, 1, 2],
            EnvKind::Pendulum(_) => &[0],
        }
    }

    pub fn velocity_indices(&self) -> &'static [usize] {
        match self.kind {
            EnvKind::PointMass2D(_) => &[2, 3],
            EnvKind::Unicycle(_) => &[3],
            EnvKind::Pendulum(_) => &[1],
        }
    }

    /// Indices of the planar center-of-mass position, when the env has one.
    pub fn xy_indices(&self) -> Option<(usize, usize)> {
        match self.kind {
            EnvKind::PointMass2D(_) | EnvKind::Unicycle(_) => Some((0, 1)),
            EnvKind::Pendulum(_) => None,
        }
    }

    pub fn heading_index(&self) -> Option<usize> {
        match self.kind {
            EnvKind::Unicycle(_) => Some(2),
            _ => None,
        }
    }

    /// Forward velocity `s^xvel` read from a state.
    pub fn forward_velocity(&self, s: &[f64]) -> f64 {
        match self.kind {
            EnvKind::PointMass2D(_) => s[2],
            EnvKind::Unicycle(_) => s[3] * s[2].cos(),
            EnvKind::Pendulum(_) => s[1],
        }
    }

    /// Speed reached under constant full forward actuation.
    pub fn terminal_speed(&self) -> f64 {
        match self.kind {
            EnvKind::PointMass2D(p) => p.force_scale / p.drag,
            EnvKind::Unicycle(p) => p.accel_scale / p.drag,
            EnvKind::Pendulum(_) => f64::INFINITY,
        }
    }

    /// Mechanical energy of the pendulum (zero at rest, hanging).
    pub fn pendulum_energy(&self, s: &[f64]) -> Option<f64> {
        match self.kind {
            EnvKind::Pendulum(p) => {
                let inertia = p.mass * p.length * p.length;
                Some(0.5 * inertia * s[1] * s[1] + p.mass * p.gravity * p.length * (1.0 - s[0].cos()))
            }
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument("dt must be positive".into()));
        }
        if !(self.init_noise_variance >= 0.0) {
            return Err(Error::InvalidArgument("init noise variance must be >= 0".into()));
        }
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
            }
        };
        match self.kind {
            EnvKind::PointMass2D(p) => {
                positive("mass", p.mass)?;
                positive("force_scale", p.force_scale)?;
                if p.drag < 0.0 {
                    return Err(Error::InvalidArgument("drag must be >= 0".into()));
                }
            }
            EnvKind::Unicycle(p) => {
                positive("accel_scale", p.accel_scale)?;
                positive("turn_rate", p.turn_rate)?;
                if p.drag < 0.0 {
                    return Err(Error::InvalidArgument("drag must be >= 0".into()));
                }
            }
            EnvKind::Pendulum(p) => {
                positive("mass", p.mass)?;
                positive("length", p.length)?;
                positive("max_torque", p.max_torque)?;
                if p.gravity < 0.0 || p.damping < 0.0 || p.substeps == 0 {
                    return Err(Error::InvalidArgument(
                        "gravity and damping must be >= 0, substeps >= 1".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

impl Environment for EnvSpec {
    fn state_dim(&self) -> usize {
        match self.kind {
            EnvKind::PointMass2D(_) | EnvKind::Unicycle(_) => 4,
            EnvKind::Pendulum(_) => 2,
        }
    }

    fn action_dim(&self) -> usize {
        match self.kind {
            EnvKind::PointMass2D(_) | EnvKind::Unicycle(_) => 2,
            EnvKind::Pendulum(_) => 1,
        }
    }

    fn dt(&self) -> f64 {
        self.dt
    }

    fn step(&self, s: &[f64], a: &[f64]) -> Vec<f64> {
        let a = clip_action(a);
        let dt = self.dt;
        match self.kind {
            EnvKind::PointMass2D(p) => {
                let vx = s[2] + dt * (p.force_scale * a[0] - p.drag * s[2]) / p.mass;
                let vy = s[3] + dt * (p.force_scale * a[1] - p.drag * s[3]) / p.mass;
                vec![s[0] + dt * vx, s[1] + dt * vy, vx, vy]
            }
            EnvKind::Unicycle(p) => {
                let speed = s[3] + dt * (p.accel_scale * a[0] - p.drag * s[3]);
                let heading = s[2] + dt * p.turn_rate * a[1];
                vec![
                    s[0] + dt * speed * heading.cos(),
                    s[1] + dt * speed * heading.sin(),
                    heading,
                    speed,
                ]
            }
            EnvKind::Pendulum(p) => {
                let h = dt / p.substeps as f64;
                let inertia = p.mass * p.length * p.length;
                let (mut theta, mut omega) = (s[0], s[1]);
                for _ in 0..p.substeps {
                    let accel = -(p.gravity / p.length) * theta.sin()
                        + (p.max_torque * a[0] - p.damping * omega) / inertia;
                    omega += h * accel;
                    theta += h * omega;
                }
                vec![theta, omega]
            }
        }
    }

    fn initial_state(&self, rng: &mut SeedRng) -> Vec<f64> {
        sample_initial_state(self, rng, Exploration::Standard)
            .expect("standard exploration is valid for every environment")
    }
}

/// Nominal start state plus `N(0, init_noise_variance)` on position and velocity
/// components; `HeadingSweep` also adds `Uniform(-pi, pi)` to the heading.
pub fn sample_initial_state(
    spec: &EnvSpec,
    rng: &mut SeedRng,
    exploration: Exploration,
) -> Result<Vec<f64>> {
    if exploration == Exploration::HeadingSweep && spec.heading_index().is_none() {
        return Err(Error::InvalidArgument(format!(
            "heading_sweep requires a heading element; `{}` has none",
            spec.name()
        )));
    }
    let mut s = spec.nominal_state();
    if spec.init_noise_variance > 0.0 {
        let normal = Normal::new(0.0, spec.init_noise_variance.sqrt())
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        for &i in spec.position_indices().iter().chain(spec.velocity_indices()) {
            s[i] += normal.sample(rng);
        }
    }
    if exploration == Exploration::HeadingSweep {
        let i = spec.heading_index().unwrap();
        s[i] += rng.random_range(-PI..PI);
    }
    Ok(s)
}

/// Reward template `s_next^xvel − c·‖a/d‖²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForwardRewardParams {
    pub c: f64,
    pub d: f64,
}

impl Default for ForwardRewardParams {
    fn default() -> Self {
        Self { c: 0.05, d: 1.0 }
    }
}

pub fn reward_forward(spec: &EnvSpec, params: ForwardRewardParams, s_next: &[f64], a: &[f64]) -> f64 {
    forward_reward_template(spec.forward_velocity(s_next), params, a)
}

pub fn forward_reward_template(xvel: f64, params: ForwardRewardParams, a: &[f64]) -> f64 {
    let norm2: f64 = a.iter().map(|v| (v / params.d).powi(2)).sum();
    xvel - params.c * norm2
}
