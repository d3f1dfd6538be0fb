//! Transitions, trajectories, training datasets and normalization statistics.

use std::path::Path;

use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding;

/// Floor applied to every standard deviation.
pub const STD_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub next_state: Vec<f64>,
    pub dt: f64,
}

/// Ordered transitions where each `next_state` is the following `state`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    transitions: Vec<Transition>,
}

impl Trajectory {
    pub fn new(transitions: Vec<Transition>) -> Result<Self> {
        if let Some(first) = transitions.first() {
            let (n, m, dt) = (first.state.len(), first.action.len(), first.dt);
            for (i, t) in transitions.iter().enumerate() {
                if t.state.len() != n || t.next_state.len() != n {
                    return Err(Error::dim("trajectory state", n, t.state.len().max(t.next_state.len())));
                }
                if t.action.len() != m {
                    return Err(Error::dim("trajectory action", m, t.action.len()));
                }
                if t.dt != dt {
                    return Err(Error::InvalidArgument(format!("transition {i} has a different dt")));
                }
            }
            for (i, w) in transitions.windows(2).enumerate() {
                if w[0].next_state != w[1].state {
                    return Err(Error::InvalidArgument(format!(
                        "transition {i} does not chain into transition {}",
                        i + 1
                    )));
                }
            }
        }
        Ok(Self { transitions })
    }

    /// Builds a trajectory from `T` states and `T - 1` actions.
    pub fn from_states_actions(states: &[Vec<f64>], actions: &[Vec<f64>], dt: f64) -> Result<Self> {
        if states.len() != actions.len() + 1 {
            return Err(Error::dim("trajectory states", actions.len() + 1, states.len()));
        }
        let transitions = actions
            .iter()
            .enumerate()
            .map(|(i, a)| Transition {
                state: states[i].clone(),
                action: a.clone(),
                next_state: states[i + 1].clone(),
                dt,
            })
            .collect();
        Self::new(transitions)
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn dt(&self) -> Option<f64> {
        self.transitions.first().map(|t| t.dt)
    }

    pub fn state_dim(&self) -> Option<usize> {
        self.transitions.first().map(|t| t.state.len())
    }

    pub fn action_dim(&self) -> Option<usize> {
        self.transitions.first().map(|t| t.action.len())
    }

    /// All visited states, `len() + 1` of them.
    pub fn states(&self) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = self.transitions.iter().map(|t| t.state.clone()).collect();
        if let Some(last) = self.transitions.last() {
            out.push(last.next_state.clone());
        }
        out
    }

    pub fn actions(&self) -> Vec<Vec<f64>> {
        self.transitions.iter().map(|t| t.action.clone()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Rand,
    Rl,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Rand => "rand",
            Provenance::Rl => "rl",
        }
    }
}

impl std::str::FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rand" => Ok(Provenance::Rand),
            "rl" => Ok(Provenance::Rl),
            other => Err(Error::InvalidArgument(format!("unknown provenance tag `{other}`"))),
        }
    }
}

/// Inputs `(s, a)` with delta labels `s' − s`, one row per transition.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionDataset {
    state_dim: usize,
    action_dim: usize,
    inputs: Array2<f64>,
    labels: Array2<f64>,
    pub tag: Provenance,
}

impl TransitionDataset {
    pub fn empty(state_dim: usize, action_dim: usize, tag: Provenance) -> Self {
        Self {
            state_dim,
            action_dim,
            inputs: Array2::zeros((0, state_dim + action_dim)),
            labels: Array2::zeros((0, state_dim)),
            tag,
        }
    }

    pub fn from_arrays(
        state_dim: usize,
        action_dim: usize,
        inputs: Array2<f64>,
        labels: Array2<f64>,
        tag: Provenance,
    ) -> Result<Self> {
        if inputs.ncols() != state_dim + action_dim {
            return Err(Error::dim("dataset input width", state_dim + action_dim, inputs.ncols()));
        }
        if labels.ncols() != state_dim {
            return Err(Error::dim("dataset label width", state_dim, labels.ncols()));
        }
        if inputs.nrows() != labels.nrows() {
            return Err(Error::dim("dataset rows", inputs.nrows(), labels.nrows()));
        }
        Ok(Self {
            state_dim,
            action_dim,
            inputs,
            labels,
            tag,
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn inputs(&self) -> &Array2<f64> {
        &self.inputs
    }

    pub fn labels(&self) -> &Array2<f64> {
        &self.labels
    }

    /// Appends every transition of `traj`.
    pub fn extend(&mut self, traj: &Trajectory) -> Result<()> {
        let other = slice_trajectories(std::slice::from_ref(traj), self.tag)?;
        if other.is_empty() {
            return Ok(());
        }
        self.append(&other)
    }

    pub fn append(&mut self, other: &TransitionDataset) -> Result<()> {
        if other.state_dim != self.state_dim || other.action_dim != self.action_dim {
            return Err(Error::dim("appended dataset state dim", self.state_dim, other.state_dim));
        }
        self.inputs = concatenate(Axis(0), &[self.inputs.view(), other.inputs.view()])
            .expect("widths checked");
        self.labels = concatenate(Axis(0), &[self.labels.view(), other.labels.view()])
            .expect("widths checked");
        Ok(())
    }

    pub fn rows(&self, start: usize, end: usize) -> (ArrayView2<'_, f64>, ArrayView2<'_, f64>) {
        (
            self.inputs.slice(s![start..end, ..]),
            self.labels.slice(s![start..end, ..]),
        )
    }
}

/// One `(input, label)` pair per transition, label `s_{t+1} − s_t`.
pub fn slice_trajectories(trajs: &[Trajectory], tag: Provenance) -> Result<TransitionDataset> {
    let first = trajs
        .iter()
        .find(|t| !t.is_empty())
        .ok_or(Error::EmptyDataset("no transitions to slice"))?;
    let n = first.state_dim().unwrap();
    let m = first.action_dim().unwrap();
    let rows: usize = trajs.iter().map(|t| t.len()).sum();
    let mut inputs = Array2::zeros((rows, n + m));
    let mut labels = Array2::zeros((rows, n));
    let mut r = 0;
    for traj in trajs {
        for t in traj.transitions() {
            if t.state.len() != n {
                return Err(Error::dim("sliced state", n, t.state.len()));
            }
            if t.action.len() != m {
                return Err(Error::dim("sliced action", m, t.action.len()));
            }
            for j in 0..n {
                inputs[[r, j]] = t.state[j];
                labels[[r, j]] = t.next_state[j] - t.state[j];
            }
            for j in 0..m {
                inputs[[r, n + j]] = t.action[j];
            }
            r += 1;
        }
    }
    TransitionDataset::from_arrays(n, m, inputs, labels, tag)
}

/// Per-dimension mean and population standard deviation of inputs and labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub input_mean: Vec<f64>,
    pub input_std: Vec<f64>,
    pub label_mean: Vec<f64>,
    pub label_std: Vec<f64>,
}

fn column_stats(data: &[ArrayView2<'_, f64>]) -> (Vec<f64>, Vec<f64>) {
    let width = data[0].ncols();
    let rows: usize = data.iter().map(|d| d.nrows()).sum();
    let mut mean = vec![0.0; width];
    for d in data {
        for row in d.rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
    }
    mean.iter_mut().for_each(|m| *m /= rows as f64);
    let mut var = vec![0.0; width];
    for d in data {
        for row in d.rows() {
            for ((acc, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *acc += (v - m) * (v - m);
            }
        }
    }
    let std = var
        .iter()
        .map(|v| (v / rows as f64).sqrt().max(STD_FLOOR))
        .collect();
    (mean, std)
}

impl NormStats {
    /// Mean 0 and std 1 everywhere.
    pub fn identity(state_dim: usize, action_dim: usize) -> Self {
        Self {
            input_mean: vec![0.0; state_dim + action_dim],
            input_std: vec![1.0; state_dim + action_dim],
            label_mean: vec![0.0; state_dim],
            label_std: vec![1.0; state_dim],
        }
    }

    pub fn from_dataset(dataset: &TransitionDataset) -> Result<Self> {
        Self::from_datasets(&[dataset])
    }

    /// Statistics over the union of several datasets.
    pub fn from_datasets(datasets: &[&TransitionDataset]) -> Result<Self> {
        let nonempty: Vec<&&TransitionDataset> = datasets.iter().filter(|d| !d.is_empty()).collect();
        if nonempty.is_empty() {
            return Err(Error::EmptyDataset("cannot compute statistics of an empty dataset"));
        }
        let ins: Vec<_> = nonempty.iter().map(|d| d.inputs.view()).collect();
        let labs: Vec<_> = nonempty.iter().map(|d| d.labels.view()).collect();
        let (input_mean, input_std) = column_stats(&ins);
        let (label_mean, label_std) = column_stats(&labs);
        Ok(Self {
            input_mean,
            input_std,
            label_mean,
            label_std,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.label_mean.len()
    }

    pub fn input_dim(&self) -> usize {
        self.input_mean.len()
    }

    pub fn normalize_inputs(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        normalize(x, &self.input_mean, &self.input_std)
    }

    pub fn normalize_labels(&self, y: ArrayView2<'_, f64>) -> Array2<f64> {
        normalize(y, &self.label_mean, &self.label_std)
    }

    pub fn denormalize_inputs(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        denormalize(x, &self.input_mean, &self.input_std)
    }

    pub fn denormalize_labels(&self, y: ArrayView2<'_, f64>) -> Array2<f64> {
        denormalize(y, &self.label_mean, &self.label_std)
    }

    /// The dataset mapped into normalized coordinates.
    pub fn normalize_dataset(&self, d: &TransitionDataset) -> TransitionDataset {
        TransitionDataset {
            state_dim: d.state_dim,
            action_dim: d.action_dim,
            inputs: self.normalize_inputs(d.inputs.view()),
            labels: self.normalize_labels(d.labels.view()),
            tag: d.tag,
        }
    }
}

fn normalize(x: ArrayView2<'_, f64>, mean: &[f64], std: &[f64]) -> Array2<f64> {
    let mean = Array1::from(mean.to_vec());
    let std = Array1::from(std.to_vec());
    (&x - &mean) / &std
}

fn denormalize(x: ArrayView2<'_, f64>, mean: &[f64], std: &[f64]) -> Array2<f64> {
    let mean = Array1::from(mean.to_vec());
    let std = Array1::from(std.to_vec());
    &x * &std + &mean
}

pub fn compute_norm_stats(dataset: &TransitionDataset) -> Result<NormStats> {
    NormStats::from_dataset(dataset)
}

/// Copy of `dataset` with independent `N(0, sigma²)` noise on every input and label.
pub fn augment_noise(dataset: &TransitionDataset, sigma: f64, seed: u64) -> Result<TransitionDataset> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!("noise sigma must be >= 0, got {sigma}")));
    }
    let mut out = dataset.clone();
    if sigma == 0.0 {
        return Ok(out);
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = seeding::rng(seed);
    out.inputs.iter_mut().for_each(|v| *v += normal.sample(&mut rng));
    out.labels.iter_mut().for_each(|v| *v += normal.sample(&mut rng));
    Ok(out)
}

/// Writes transitions as CSV with header `s_0.., a_0.., sn_0.., dt, tag`.
pub fn write_transitions_csv(path: &Path, trajs: &[(Provenance, &Trajectory)]) -> Result<()> {
    let Some((n, m)) = trajs
        .iter()
        .find_map(|(_, t)| Some((t.state_dim()?, t.action_dim()?)))
    else {
        return Err(Error::EmptyDataset("no transitions to write"));
    };
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = (0..n).map(|i| format!("s_{i}")).collect();
    header.extend((0..m).map(|i| format!("a_{i}")));
    header.extend((0..n).map(|i| format!("sn_{i}")));
    header.push("dt".into());
    header.push("tag".into());
    w.write_record(&header)?;
    for (tag, traj) in trajs {
        for t in traj.transitions() {
            let mut rec: Vec<String> = t.state.iter().map(|v| v.to_string()).collect();
            rec.extend(t.action.iter().map(|v| v.to_string()));
            rec.extend(t.next_state.iter().map(|v| v.to_string()));
            rec.push(t.dt.to_string());
            rec.push(tag.as_str().to_string());
            w.write_record(&rec)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Reads a transition CSV, regrouping rows into trajectories wherever consecutive
/// rows chain (same tag and `sn` equal to the next `s`).
pub fn read_transitions_csv(path: &Path) -> Result<Vec<(Provenance, Trajectory)>> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    let n = header.iter().filter(|h| h.starts_with("s_")).count();
    let m = header.iter().filter(|h| h.starts_with("a_")).count();
    if header.len() != 2 * n + m + 2 {
        return Err(Error::InvalidArgument("unexpected transition CSV header".into()));
    }
    let parse = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|e| Error::InvalidArgument(format!("bad number `{s}`: {e}")))
    };
    let mut groups: Vec<(Provenance, Vec<Transition>)> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let vals: Vec<f64> = rec.iter().take(2 * n + m + 1).map(parse).collect::<Result<_>>()?;
        let tag: Provenance = rec[2 * n + m + 1].trim().parse()?;
        let t = Transition {
            state: vals[..n].to_vec(),
            action: vals[n..n + m].to_vec(),
            next_state: vals[n + m..2 * n + m].to_vec(),
            dt: vals[2 * n + m],
        };
        match groups.last_mut() {
            Some((g, ts)) if *g == tag && ts.last().is_some_and(|p| p.next_state == t.state) => ts.push(t),
            _ => groups.push((tag, vec![t])),
        }
    }
    groups
        .into_iter()
        .map(|(tag, ts)| Ok((tag, Trajectory::new(ts)?)))
        .collect()
}
