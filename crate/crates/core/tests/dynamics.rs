mod common;

use common::{damped_rollouts, train_damped, DampedLinear};
use mbrl::dynamics::{
    h_step_validation, one_step_mse_raw, one_step_objective_raw, predict_next, rollout_open_loop, slice_trajectories,
    OracleModel, Provenance, Trajectory,
};
use mbrl::envs::{collect_random_rollouts, EnvSpec, Environment, Exploration};

#[test]
fn linear_system_is_learned_to_high_accuracy() {
    let (model, report, _) = train_damped(0, 200);
    assert_eq!(report.epoch_losses.len(), 200);
    let env = DampedLinear { dim: 2 };
    let held_out = damped_rollouts(env, 10, 10, 12345);
    let d = slice_trajectories(&held_out, Provenance::Rand).unwrap();
    assert_eq!(d.len(), 100);
    let mse = one_step_mse_raw(&model, &d).unwrap();
    assert!(mse < 1e-4, "held-out one-step mse {mse:e}");
    for t in held_out.iter().flat_map(Trajectory::transitions) {
        let pred = predict_next(&model, &t.state, &t.action).unwrap();
        for (p, s) in pred.iter().zip(&t.next_state) {
            assert!((p - s).abs() < 1e-2, "{pred:?} vs {:?}", t.next_state);
        }
    }
}

#[test]
fn training_loss_decreases_for_every_seed() {
    for seed in 0..10 {
        let (_, report, _) = train_damped(seed, 100);
        let l = &report.epoch_losses;
        assert!(l[99] < l[0], "seed {seed}: {} vs {}", l[99], l[0]);
    }
}

#[test]
fn one_step_validation_on_training_set_equals_objective() {
    let (model, _, train) = train_damped(3, 20);
    let d = slice_trajectories(&train, Provenance::Rand).unwrap();
    let objective = one_step_objective_raw(&model, &d).unwrap();
    let h1 = h_step_validation(&model, &train, 1).unwrap();
    assert!((objective - h1).abs() < 1e-9, "{objective} vs {h1}");
}

#[test]
fn oracle_model_has_zero_error_at_every_horizon() {
    for spec in [EnvSpec::point_mass(), EnvSpec::unicycle(), EnvSpec::pendulum()] {
        let trajs = collect_random_rollouts(&spec, 3, 60, 4, Exploration::Standard).unwrap();
        let oracle = OracleModel(spec);
        for h in [1, 5, 10, 50] {
            assert_eq!(h_step_validation(&oracle, &trajs, h).unwrap(), 0.0, "{} H={h}", spec.name());
        }
    }
}

#[test]
fn oracle_rollout_reproduces_environment() {
    let spec = EnvSpec::pendulum();
    let traj = &collect_random_rollouts(&spec, 1, 30, 8, Exploration::Standard).unwrap()[0];
    let pred = rollout_open_loop(&OracleModel(spec), &traj.transitions()[0].state, &traj.actions()).unwrap();
    let truth: Vec<Vec<f64>> = traj.transitions().iter().map(|t| t.next_state.clone()).collect();
    assert_eq!(pred, truth);
    assert_eq!(spec.step(&traj.transitions()[0].state, &traj.actions()[0]), truth[0]);
}

#[test]
fn compounding_error_stays_bounded() {
    let (model, _, _) = train_damped(1, 200);
    let held_out = damped_rollouts(DampedLinear { dim: 2 }, 20, 20, 777);
    let h1 = h_step_validation(&model, &held_out, 1).unwrap();
    let h10 = h_step_validation(&model, &held_out, 10).unwrap();
    assert!(h10 < 100.0 * h1, "H1 {h1:e} H10 {h10:e}");
}
