use std::path::Path;

use ndarray::{concatenate, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::data::NormStats;
use crate::envs::Environment;
use crate::error::{Error, Result};
use crate::nn::{Activation, Mlp, MlpDocument};

/// Predicted states larger than this abort an open-loop rollout.
pub const DIVERGENCE_LIMIT: f64 = 1e9;

/// Anything that can predict next states for a batch of `(state, action)` rows.
///
/// Implementations are read-only and shared across planning threads.
pub trait Dynamics: Sync {
    fn state_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    /// Row-wise next states. Non-finite predictions are returned as-is so that the
    /// caller decides how to treat them.
    fn predict_batch(&self, states: ArrayView2<'_, f64>, actions: ArrayView2<'_, f64>) -> Result<Array2<f64>>;
}

impl<D: Dynamics + ?Sized> Dynamics for &D {
    fn state_dim(&self) -> usize {
        (**self).state_dim()
    }
    fn action_dim(&self) -> usize {
        (**self).action_dim()
    }
    fn predict_batch(&self, states: ArrayView2<'_, f64>, actions: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        (**self).predict_batch(states, actions)
    }
}

/// Learned delta-state model: `s' = s + denorm(net(norm(s, a)))`.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsModel {
    pub net: Mlp,
    pub stats: NormStats,
    state_dim: usize,
    action_dim: usize,
}

impl DynamicsModel {
    /// Fresh model with identity normalization and the given hidden layers.
    pub fn new(state_dim: usize, action_dim: usize, hidden: &[usize], activation: Activation, seed: u64) -> Result<Self> {
        let mut sizes = vec![state_dim + action_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(state_dim);
        let net = Mlp::init(&sizes, activation, seed)?;
        Ok(Self {
            net,
            stats: NormStats::identity(state_dim, action_dim),
            state_dim,
            action_dim,
        })
    }

    pub fn from_parts(net: Mlp, stats: NormStats) -> Result<Self> {
        let state_dim = net.output_dim();
        if net.input_dim() < state_dim {
            return Err(Error::InvalidArgument("network input narrower than its output".into()));
        }
        let action_dim = net.input_dim() - state_dim;
        if stats.state_dim() != state_dim || stats.input_dim() != net.input_dim() {
            return Err(Error::dim("normalization statistics", net.input_dim(), stats.input_dim()));
        }
        Ok(Self {
            net,
            stats,
            state_dim,
            action_dim,
        })
    }

    /// Denormalized predicted deltas for a batch.
    pub fn predict_delta_batch(&self, states: ArrayView2<'_, f64>, actions: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        check_batch(self, states, actions)?;
        let inputs = concatenate(Axis(1), &[states, actions]).expect("row counts checked");
        self.predict_delta_inputs(inputs.view())
    }

    /// Denormalized deltas for raw concatenated `(s, a)` rows.
    pub fn predict_delta_inputs(&self, inputs: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let normalized = self.stats.normalize_inputs(inputs);
        let out = self.net.forward_batch(normalized.view())?;
        Ok(self.stats.denormalize_labels(out.view()))
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = ModelDocument {
            net: MlpDocument::from(&self.net),
            stats: self.stats.clone(),
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text)?;
        Self::from_parts(Mlp::try_from(doc.net)?, doc.stats)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingArtifact {
                path: path.to_path_buf(),
                hint: "train a model first with `mbrl train-dynamics` or pass --model".into(),
            });
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDocument {
    net: MlpDocument,
    stats: NormStats,
}

fn check_batch<D: Dynamics + ?Sized>(model: &D, states: ArrayView2<'_, f64>, actions: ArrayView2<'_, f64>) -> Result<()> {
    if states.ncols() != model.state_dim() {
        return Err(Error::dim("model state", model.state_dim(), states.ncols()));
    }
    if actions.ncols() != model.action_dim() {
        return Err(Error::dim("model action", model.action_dim(), actions.ncols()));
    }
    if states.nrows() != actions.nrows() {
        return Err(Error::dim("batch rows", states.nrows(), actions.nrows()));
    }
    Ok(())
}

impl Dynamics for DynamicsModel {
    fn state_dim(&self) -> usize {
        self.state_dim
    }

    fn action_dim(&self) -> usize {
        self.action_dim
    }

    fn predict_batch(&self, states: ArrayView2<'_, f64>, actions: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let delta = self.predict_delta_batch(states, actions)?;
        Ok(&states + &delta)
    }
}

/// Wraps the true environment as a perfect model.
#[derive(Debug, Clone, Copy)]
pub struct OracleModel<E>(pub E);

impl<E: Environment> Dynamics for OracleModel<E> {
    fn state_dim(&self) -> usize {
        self.0.state_dim()
    }

    fn action_dim(&self) -> usize {
        self.0.action_dim()
    }

    fn predict_batch(&self, states: ArrayView2<'_, f64>, actions: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        check_batch(self, states, actions)?;
        let mut out = Array2::zeros(states.raw_dim());
        for (i, (s, a)) in states.rows().into_iter().zip(actions.rows()).enumerate() {
            let next = self.0.step(&s.to_vec(), &a.to_vec());
            out.row_mut(i).assign(&ndarray::ArrayView1::from(&next));
        }
        Ok(out)
    }
}

/// `s + f(s, a)` for one state; non-finite predictions are an error.
pub fn predict_next<D: Dynamics + ?Sized>(model: &D, s: &[f64], a: &[f64]) -> Result<Vec<f64>> {
    if s.iter().chain(a).any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite model input".into()));
    }
    let states = ArrayView2::from_shape((1, s.len()), s).expect("row view");
    let actions = ArrayView2::from_shape((1, a.len()), a).expect("row view");
    let next = model.predict_batch(states, actions)?;
    let next = next.row(0).to_vec();
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("model produced a non-finite prediction".into()));
    }
    Ok(next)
}

/// Iterated predictions `ŝ_{h+1} = ŝ_h + f(ŝ_h, a_h)` starting at `s0`.
pub fn rollout_open_loop<D: Dynamics + ?Sized>(model: &D, s0: &[f64], actions: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    if actions.is_empty() {
        return Err(Error::InvalidArgument("open-loop rollout needs at least one action".into()));
    }
    let mut out = Vec::with_capacity(actions.len());
    let mut s = s0.to_vec();
    for (h, a) in actions.iter().enumerate() {
        s = predict_next(model, &s, a).map_err(|e| match e {
            Error::Numerical(_) => Error::Diverged { step: h },
            other => other,
        })?;
        if s.iter().any(|v| v.abs() > DIVERGENCE_LIMIT) {
            return Err(Error::Diverged { step: h });
        }
        out.push(s.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::EnvSpec;
    use ndarray::{array, Array1};

    fn zero_net_model(state_dim: usize, action_dim: usize, label_mean: Vec<f64>) -> DynamicsModel {
        let net = Mlp::from_parts(
            vec![],
            vec![Array2::zeros((state_dim, state_dim + action_dim))],
            vec![Array1::zeros(state_dim)],
        )
        .unwrap();
        let mut stats = NormStats::identity(state_dim, action_dim);
        stats.label_mean = label_mean;
        DynamicsModel::from_parts(net, stats).unwrap()
    }

    #[test]
    fn zero_delta_output_adds_label_mean() {
        let m = zero_net_model(2, 1, vec![0.5, -0.25]);
        assert_eq!(predict_next(&m, &[1.0, 1.0], &[0.3]).unwrap(), vec![1.5, 0.75]);
        let m0 = zero_net_model(2, 1, vec![0.0, 0.0]);
        assert_eq!(predict_next(&m0, &[1.0, 2.0], &[0.3]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn state_blind_net_gives_state_independent_delta() {
        // The net sees only the action column.
        let net = Mlp::from_parts(vec![], vec![array![[0.0, 0.0, 2.0], [0.0, 0.0, 1.0]]], vec![array![0.1, 0.0]]).unwrap();
        let mut stats = NormStats::identity(2, 1);
        stats.label_std = vec![3.0, 0.5];
        stats.label_mean = vec![0.2, -0.1];
        let m = DynamicsModel::from_parts(net, stats).unwrap();
        let a = array![[0.7], [0.7]];
        let states = array![[1.0, -3.0], [250.0, 4.5]];
        let d = m.predict_delta_batch(states.view(), a.view()).unwrap();
        assert_eq!(d.row(0), d.row(1));
        let next = m.predict_batch(states.view(), a.view()).unwrap();
        for r in 0..2 {
            for j in 0..2 {
                assert!(((next[[r, j]] - states[[r, j]]) - d[[r, j]]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn open_loop_base_case_and_oracle() {
        let m = zero_net_model(1, 1, vec![0.25]);
        let one = rollout_open_loop(&m, &[0.0], &[vec![0.0]]).unwrap();
        assert_eq!(one, vec![predict_next(&m, &[0.0], &[0.0]).unwrap()]);

        let env = EnvSpec::point_mass();
        let oracle = OracleModel(env);
        let actions: Vec<Vec<f64>> = (0..20).map(|i| vec![(i as f64 * 0.3).sin(), 0.5]).collect();
        let pred = rollout_open_loop(&oracle, &[0.0; 4], &actions).unwrap();
        let mut s = vec![0.0; 4];
        for (a, p) in actions.iter().zip(&pred) {
            s = env.step(&s, a);
            assert_eq!(&s, p);
        }
    }

    #[test]
    fn constant_bias_compounds_linearly() {
        let delta = 0.125;
        let m = zero_net_model(1, 1, vec![delta]);
        let pred = rollout_open_loop(&m, &[2.0], &vec![vec![0.0]; 6]).unwrap();
        for (h, p) in pred.iter().enumerate() {
            assert_eq!(p[0], 2.0 + (h + 1) as f64 * delta);
        }
    }

    #[test]
    fn divergence_reports_step() {
        let m = zero_net_model(1, 1, vec![4e8]);
        let err = rollout_open_loop(&m, &[0.0], &vec![vec![0.0]; 5]).unwrap_err();
        assert!(matches!(err, Error::Diverged { step: 2 }), "{err}");
    }

    #[test]
    fn json_roundtrip() {
        let m = DynamicsModel::new(4, 2, &[8, 8], Activation::Relu, 3).unwrap();
        let back = DynamicsModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(m, back);
    }
}
