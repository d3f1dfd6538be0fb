//! Adam with bias correction.

use serde::{Deserialize, Serialize};

use super::mlp::{Gradients, Mlp};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            ..Self::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Optimizer state: zero-initialized moments and a step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub first_moment: Gradients,
    pub second_moment: Gradients,
    pub step_count: u64,
}

impl AdamState {
    pub fn new(params: &Mlp, config: AdamConfig) -> Self {
        Self {
            config,
            first_moment: Gradients::zeros_like(params),
            second_moment: Gradients::zeros_like(params),
            step_count: 0,
        }
    }

    /// Applies one bias-corrected update in place and increments `step_count`.
    pub fn step(&mut self, params: &mut Mlp, grads: &Gradients) -> Result<()> {
        if !grads.matches_shape(params) || !self.first_moment.matches_shape(params) {
            return Err(Error::InvalidArgument(
                "gradient or optimizer state shape does not match parameters".into(),
            ));
        }
        self.step_count += 1;
        let AdamConfig {
            learning_rate: lr,
            beta1: b1,
            beta2: b2,
            epsilon: eps,
        } = self.config;
        let t = self.step_count as i32;
        let c1 = 1.0 - b1.powi(t);
        let c2 = 1.0 - b2.powi(t);
        let update = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        };
        let layers = params.num_layers();
        for i in 0..layers {
            ndarray::Zip::from(&mut params.weights_mut()[i])
                .and(&grads.weights[i])
                .and(&mut self.first_moment.weights[i])
                .and(&mut self.second_moment.weights[i])
                .for_each(|p, &g, m, v| update(p, g, m, v));
            ndarray::Zip::from(&mut params.biases_mut()[i])
                .and(&grads.biases[i])
                .and(&mut self.first_moment.biases[i])
                .and(&mut self.second_moment.biases[i])
                .for_each(|p, &g, m, v| update(p, g, m, v));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Activation;
    use ndarray::{array, Array1, Array2};

    fn scalar_net(p: f64) -> Mlp {
        Mlp::from_parts(vec![], vec![array![[p]]], vec![Array1::zeros(1)]).unwrap()
    }

    fn scalar_grad(g: f64) -> Gradients {
        Gradients {
            weights: vec![array![[g]]],
            biases: vec![array![0.0]],
        }
    }

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let mut net = Mlp::init(&[3, 4, 2], Activation::Tanh, 2).unwrap();
        let before = net.clone();
        let mut state = AdamState::new(&net, AdamConfig::default());
        let zero = Gradients::zeros_like(&net);
        state.step(&mut net, &zero).unwrap();
        assert_eq!(net, before);
        assert_eq!(state.step_count, 1);
    }

    #[test]
    fn first_step_matches_hand_recurrence() {
        let (g, lr, b1, b2, eps) = (0.5_f64, 0.001, 0.9, 0.999, 1e-8_f64);
        // Hand-evaluated t=1: m=(1-b1)g, v=(1-b2)g^2, m_hat=g, v_hat=g^2.
        let m = (1.0 - b1) * g;
        let v = (1.0 - b2) * g * g;
        let expected = 1.0 - lr * (m / (1.0 - b1)) / ((v / (1.0 - b2)).sqrt() + eps);
        let mut net = scalar_net(1.0);
        let mut state = AdamState::new(&net, AdamConfig::with_learning_rate(lr));
        state.step(&mut net, &scalar_grad(g)).unwrap();
        let p = net.weights()[0][[0, 0]];
        assert!((p - expected).abs() < 1e-15);
        assert!((1.0 - p - lr * g / (g + eps)).abs() < 1e-15);
    }

    #[test]
    fn two_steps_match_unrolled_recurrence() {
        let (g, lr, b1, b2, eps) = (0.5_f64, 0.001, 0.9_f64, 0.999_f64, 1e-8);
        let mut p = 1.0;
        let (mut m, mut v) = (0.0, 0.0);
        for t in 1..=2 {
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let m_hat = m / (1.0 - b1.powi(t));
            let v_hat = v / (1.0 - b2.powi(t));
            p -= lr * m_hat / (v_hat.sqrt() + eps);
        }
        let mut net = scalar_net(1.0);
        let mut state = AdamState::new(&net, AdamConfig::with_learning_rate(lr));
        state.step(&mut net, &scalar_grad(g)).unwrap();
        state.step(&mut net, &scalar_grad(g)).unwrap();
        assert!((net.weights()[0][[0, 0]] - p).abs() < 1e-15);
        assert_eq!(state.step_count, 2);
    }

    #[test]
    fn rejects_mismatched_shapes() {
        let mut net = scalar_net(0.0);
        let mut state = AdamState::new(&net, AdamConfig::default());
        let bad = Gradients {
            weights: vec![Array2::zeros((2, 2))],
            biases: vec![Array1::zeros(2)],
        };
        assert!(state.step(&mut net, &bad).is_err());
    }
}
