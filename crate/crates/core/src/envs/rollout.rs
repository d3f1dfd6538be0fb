use rand::Rng;

use super::{sample_initial_state, EnvSpec, Environment, Exploration};
use crate::dynamics::{Trajectory, Transition};
use crate::error::{Error, Result};
use crate::seeding;

/// Rollouts under i.i.d. `Uniform[-1, 1]` actions. A rollout of length `T` holds
/// `T` states and therefore `T - 1` transitions. Rollout `i` uses the child seed
/// `i` of `seed`.
pub fn collect_random_rollouts(
    spec: &EnvSpec,
    num_rollouts: usize,
    rollout_length: usize,
    seed: u64,
    exploration: Exploration,
) -> Result<Vec<Trajectory>> {
    if rollout_length < 2 {
        return Err(Error::InvalidArgument(format!(
            "rollout length must be >= 2, got {rollout_length}"
        )));
    }
    (0..num_rollouts)
        .map(|i| {
            let mut rng = seeding::rng(seeding::child(seed, i as u64));
            let s0 = sample_initial_state(spec, &mut rng, exploration)?;
            let m = spec.action_dim();
            rollout_policy(spec, s0, rollout_length - 1, |_| {
                (0..m).map(|_| rng.random_range(-1.0..=1.0)).collect()
            })
        })
        .collect()
}

/// Runs `steps` transitions from `s0`, asking `policy` for each action.
pub fn rollout_policy<E, P>(env: &E, s0: Vec<f64>, steps: usize, mut policy: P) -> Result<Trajectory>
where
    E: Environment + ?Sized,
    P: FnMut(&[f64]) -> Vec<f64>,
{
    let mut transitions: Vec<Transition> = Vec::with_capacity(steps);
    let mut s = s0;
    for _ in 0..steps {
        let a = policy(&s);
        let t = env.transition(&s, &a);
        s = t.next_state.clone();
        transitions.push(t);
    }
    Trajectory::new(transitions)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_match_request() {
        let trajs = collect_random_rollouts(&EnvSpec::point_mass(), 25, 333, 1, Exploration::Standard).unwrap();
        assert_eq!(trajs.len(), 25);
        assert!(trajs.iter().all(|t| t.len() == 332));
    }

    #[test]
    fn deterministic_and_chained() {
        let env = EnvSpec::unicycle();
        let a = collect_random_rollouts(&env, 3, 50, 9, Exploration::HeadingSweep).unwrap();
        let b = collect_random_rollouts(&env, 3, 50, 9, Exploration::HeadingSweep).unwrap();
        assert_eq!(a, b);
        for t in &a {
            for w in t.transitions().windows(2) {
                assert_eq!(w[0].next_state, w[1].state);
            }
        }
    }

    #[test]
    fn uniform_actions_have_zero_mean_and_bounded_range() {
        let trajs = collect_random_rollouts(&EnvSpec::point_mass(), 50, 1001, 2, Exploration::Standard).unwrap();
        let actions: Vec<f64> = trajs
            .iter()
            .flat_map(|t| t.transitions().iter().flat_map(|tr| tr.action.iter().copied()))
            .collect();
        assert!(actions.len() >= 100_000);
        let mean = actions.iter().sum::<f64>() / actions.len() as f64;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!(actions.iter().all(|a| (-1.0..=1.0).contains(a)));
    }

    #[test]
    fn short_rollouts_rejected() {
        assert!(collect_random_rollouts(&EnvSpec::point_mass(), 1, 1, 0, Exploration::Standard).is_err());
    }
}
