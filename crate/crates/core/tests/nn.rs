mod common;

use mbrl::nn::{half_squared_error, Activation, AdamConfig, AdamState, Gradients, Mlp};
use mbrl::seeding;
use ndarray::{Array1, Array2};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn finite_difference_gradients_relu_and_tanh() {
    for seed in 0..10 {
        for act in [Activation::Relu, Activation::Tanh] {
            let err = common::gradient_check_case(act, seed);
            assert!(err < 1e-5, "{act:?} seed {seed}: relative error {err:e}");
        }
    }
}

#[test]
fn batched_gradient_is_mean_of_per_sample_gradients() {
    let net = Mlp::init(&[3, 6, 2], Activation::Tanh, 4).unwrap();
    let x = Array2::from_shape_fn((5, 3), |(i, j)| (i as f64 - 2.0) * 0.3 + j as f64 * 0.1);
    let g = Array2::from_shape_fn((5, 2), |(i, j)| ((i + 2 * j) as f64).sin());
    let trace = net.forward_trace(x.view()).unwrap();
    let (batched, _) = net.backward_trace(&trace, (&g / 5.0).view()).unwrap();
    let mut mean = Gradients::zeros_like(&net);
    for i in 0..5 {
        let (gi, _) = net.backward(&x.row(i).to_vec(), &g.row(i).to_vec()).unwrap();
        mean.add_assign(&gi);
    }
    mean.scale(0.2);
    for (a, b) in batched.flatten().iter().zip(mean.flatten()) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn wide_network_layer_shapes() {
    let net = Mlp::init(&[17, 500, 500, 17], Activation::Relu, 0).unwrap();
    let shapes: Vec<_> = net.weights().iter().map(|w| w.dim()).collect();
    assert_eq!(shapes, vec![(500, 17), (500, 500), (17, 500)]);
    assert_ne!(net, Mlp::init(&[17, 500, 500, 17], Activation::Relu, 1).unwrap());
}

#[test]
fn forward_is_deterministic() {
    let net = Mlp::init(&[3, 16, 16, 2], Activation::Tanh, 9).unwrap();
    let x = [0.3, -0.7, 1.2];
    let a = net.forward(&x).unwrap();
    for _ in 0..5 {
        assert_eq!(net.forward(&x).unwrap(), a);
    }
}

#[test]
fn fits_affine_function() {
    let mut rng = seeding::rng(5);
    let xs: Vec<f64> = (0..50).map(|_| rng.random_range(-1.0..1.0)).collect();
    let x = Array2::from_shape_fn((50, 1), |(i, _)| xs[i]);
    let y = x.mapv(|v| 2.0 * v + 1.0);
    let mut net = Mlp::init(&[1, 16, 1], Activation::Tanh, 3).unwrap();
    let mut adam = AdamState::new(&net, AdamConfig::with_learning_rate(1e-2));
    let mut mse = f64::INFINITY;
    for _ in 0..2000 {
        let trace = net.forward_trace(x.view()).unwrap();
        let (loss, grad) = half_squared_error(trace.output().view(), y.view());
        mse = 2.0 * loss;
        let (g, _) = net.backward_trace(&trace, grad.view()).unwrap();
        adam.step(&mut net, &g).unwrap();
    }
    let pred = net.forward_batch(x.view()).unwrap();
    mse = mse.min((&pred - &y).mapv(|d| d * d).mean().unwrap());
    assert!(mse < 1e-4, "mse {mse:e}");
}

fn scalar_net(w: f64) -> Mlp {
    Mlp::from_parts(vec![], vec![Array2::from_elem((1, 1), w)], vec![Array1::zeros(1)]).unwrap()
}

proptest! {
    // With epsilon near zero the first Adam step has magnitude lr whatever the gradient scale.
    #[test]
    fn first_adam_step_is_sign_like(g in prop_oneof![1e-3f64..1e3, -1e3f64..-1e-3], lr in 1e-4f64..1e-1) {
        let mut net = scalar_net(0.5);
        let cfg = AdamConfig { learning_rate: lr, epsilon: 1e-12, ..AdamConfig::default() };
        let mut adam = AdamState::new(&net, cfg);
        let grads = Gradients { weights: vec![Array2::from_elem((1, 1), g)], biases: vec![Array1::zeros(1)] };
        adam.step(&mut net, &grads).unwrap();
        let delta = net.weights()[0][[0, 0]] - 0.5;
        // Upper bound allows for rounding in `p + Δ − p`.
        prop_assert!(delta.abs() <= lr * (1.0 + 1e-12) && delta.abs() >= lr * (1.0 - 1e-3), "{} vs {}", delta, lr);
        prop_assert_eq!(delta.signum(), -g.signum());
    }
}
