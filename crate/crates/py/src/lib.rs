//! Python bindings: environments, dynamics models, planners, configs and the
//! experiment commands.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyFileNotFoundError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use mbrl::aggregation::{run_mbrl, validation_errors};
use mbrl::commands::{self as cmds, AblationAxis, ModelSource};
use mbrl::config::{ExperimentConfig, PRESETS};
use mbrl::control::{random_shooting, trajectory_reward, PathReward, PathSpec};
use mbrl::dynamics::{h_step_validation, predict_next, rollout_open_loop, Dynamics, OracleModel, Trajectory};
use mbrl::envs::{collect_random_rollouts, sample_initial_state, EnvSpec, Environment, Exploration};
use mbrl::error::Error;
use mbrl::imitation::GaussianPolicy;
use mbrl::nn::Activation;
use mbrl::seeding;

create_exception!(mbrl_py, MbrlError, PyException, "Error raised by the mbrl toolkit.");

fn to_py(e: Error) -> PyErr {
    match e {
        Error::MissingArtifact { .. } => PyFileNotFoundError::new_err(e.to_string()),
        Error::Dimension { .. } | Error::InvalidArgument(_) | Error::ConfigField { .. } | Error::ConfigParse(_) => {
            PyValueError::new_err(e.to_string())
        }
        other => MbrlError::new_err(other.to_string()),
    }
}

fn exploration(name: &str) -> PyResult<Exploration> {
    match name {
        "standard" => Ok(Exploration::Standard),
        "heading_sweep" => Ok(Exploration::HeadingSweep),
        other => Err(PyValueError::new_err(format!("unknown exploration `{other}` (standard, heading_sweep)"))),
    }
}

fn trajectory_pair(t: &Trajectory) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    (t.states(), t.actions())
}

/// An analytic environment with actions bounded to [-1, 1].
#[pyclass(name = "EnvSpec", module = "mbrl_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyEnvSpec {
    inner: EnvSpec,
}

#[pymethods]
impl PyEnvSpec {
    /// `name` is one of point_mass, unicycle, pendulum.
    #[new]
    #[pyo3(signature = (name, dt=None))]
    fn new(name: &str, dt: Option<f64>) -> PyResult<Self> {
        let base = match name {
            "point_mass" => EnvSpec::point_mass(),
            "unicycle" => EnvSpec::unicycle(),
            "pendulum" => EnvSpec::pendulum(),
            other => return Err(PyValueError::new_err(format!("unknown environment `{other}`"))),
        };
        let inner = match dt {
            Some(dt) => EnvSpec::new(base.kind, dt).map_err(to_py)?,
            None => base,
        };
        Ok(Self { inner })
    }

    #[getter]
    fn name(&self) -> &'static str {
        self.inner.name()
    }
    #[getter]
    fn state_dim(&self) -> usize {
        self.inner.state_dim()
    }
    #[getter]
    fn action_dim(&self) -> usize {
        self.inner.action_dim()
    }
    #[getter]
    fn dt(&self) -> f64 {
        self.inner.dt()
    }

    fn step(&self, state: Vec<f64>, action: Vec<f64>) -> PyResult<Vec<f64>> {
        check_len("state", self.inner.state_dim(), state.len())?;
        check_len("action", self.inner.action_dim(), action.len())?;
        Ok(self.inner.step(&state, &action))
    }

    #[pyo3(signature = (seed, exploration="standard"))]
    fn initial_state(&self, seed: u64, exploration: &str) -> PyResult<Vec<f64>> {
        sample_initial_state(&self.inner, &mut seeding::rng(seed), self::exploration(exploration)?).map_err(to_py)
    }

    /// Uniform-action rollouts as a list of `(states, actions)` pairs.
    #[pyo3(signature = (num_rollouts, rollout_length, seed, exploration="standard"))]
    fn random_rollouts(
        &self,
        num_rollouts: usize,
        rollout_length: usize,
        seed: u64,
        exploration: &str,
    ) -> PyResult<Vec<(Vec<Vec<f64>>, Vec<Vec<f64>>)>> {
        let trajs = collect_random_rollouts(&self.inner, num_rollouts, rollout_length, seed, self::exploration(exploration)?)
            .map_err(to_py)?;
        Ok(trajs.iter().map(trajectory_pair).collect())
    }

    fn __repr__(&self) -> String {
        format!("EnvSpec({:?}, dt={})", self.inner.name(), self.inner.dt())
    }
}

fn check_len(what: &str, expected: usize, actual: usize) -> PyResult<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(PyValueError::new_err(format!("{what} has length {actual}, expected {expected}")))
    }
}

/// Learned delta-state dynamics model.
#[pyclass(name = "DynamicsModel", module = "mbrl_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyDynamicsModel {
    inner: mbrl::dynamics::DynamicsModel,
}

#[pymethods]
impl PyDynamicsModel {
    #[new]
    #[pyo3(signature = (state_dim, action_dim, hidden, activation="relu", seed=0))]
    fn new(state_dim: usize, action_dim: usize, hidden: Vec<usize>, activation: &str, seed: u64) -> PyResult<Self> {
        let activation = match activation {
            "relu" => Activation::Relu,
            "tanh" => Activation::Tanh,
            other => return Err(PyValueError::new_err(format!("unknown activation `{other}` (relu, tanh)"))),
        };
        let inner = mbrl::dynamics::DynamicsModel::new(state_dim, action_dim, &hidden, activation, seed).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: mbrl::dynamics::DynamicsModel::load(&path).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: mbrl::dynamics::DynamicsModel::from_json(text).map_err(to_py)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(to_py)
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(to_py)
    }

    #[getter]
    fn state_dim(&self) -> usize {
        self.inner.state_dim()
    }
    #[getter]
    fn action_dim(&self) -> usize {
        self.inner.action_dim()
    }

    fn predict(&self, state: Vec<f64>, action: Vec<f64>) -> PyResult<Vec<f64>> {
        predict_next(&self.inner, &state, &action).map_err(to_py)
    }

    /// Open-loop predicted states `s_1..s_H` under `actions`.
    fn rollout(&self, s0: Vec<f64>, actions: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        rollout_open_loop(&self.inner, &s0, &actions).map_err(to_py)
    }

    /// H-step errors on `(states, actions)` trajectories.
    fn validation_errors(&self, trajectories: Vec<(Vec<Vec<f64>>, Vec<Vec<f64>>)>, horizons: Vec<usize>, dt: f64) -> PyResult<Vec<(usize, f64)>> {
        let trajs = to_trajectories(trajectories, dt)?;
        horizons
            .into_iter()
            .map(|h| h_step_validation(&self.inner, &trajs, h).map(|e| (h, e)).map_err(to_py))
            .collect()
    }
}

fn to_trajectories(raw: Vec<(Vec<Vec<f64>>, Vec<Vec<f64>>)>, dt: f64) -> PyResult<Vec<Trajectory>> {
    raw.iter()
        .map(|(s, a)| Trajectory::from_states_actions(s, a, dt).map_err(to_py))
        .collect()
}

/// Gaussian policy with a tanh mean network and fixed diagonal std.
#[pyclass(name = "GaussianPolicy", module = "mbrl_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGaussianPolicy {
    inner: GaussianPolicy,
}

#[pymethods]
impl PyGaussianPolicy {
    #[new]
    #[pyo3(signature = (state_dim, action_dim, hidden=vec![64, 64], std=1.0, seed=0))]
    fn new(state_dim: usize, action_dim: usize, hidden: Vec<usize>, std: f64, seed: u64) -> PyResult<Self> {
        Ok(Self {
            inner: GaussianPolicy::new(state_dim, action_dim, &hidden, std, seed).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: GaussianPolicy::load(&path).map_err(to_py)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(to_py)
    }

    fn mean(&self, state: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.mean(&state).map_err(to_py)
    }

    /// Clipped stochastic action.
    fn act(&self, state: Vec<f64>, seed: u64) -> PyResult<Vec<f64>> {
        self.inner.act(&state, &mut seeding::rng(seed)).map_err(to_py)
    }
}

/// Validated experiment configuration.
#[pyclass(name = "ExperimentConfig", module = "mbrl_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyExperimentConfig {
    inner: ExperimentConfig,
}

#[pymethods]
impl PyExperimentConfig {
    /// Defaults, a named preset, or either with `key=value` overrides.
    #[new]
    #[pyo3(signature = (preset=None, overrides=vec![]))]
    fn new(preset: Option<&str>, overrides: Vec<String>) -> PyResult<Self> {
        let base = match preset {
            Some(p) => ExperimentConfig::preset(p).map_err(to_py)?,
            None => ExperimentConfig::default(),
        };
        Ok(Self {
            inner: base.with_overrides(&overrides).map_err(to_py)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (path, overrides=vec![]))]
    fn load(path: PathBuf, overrides: Vec<String>) -> PyResult<Self> {
        Ok(Self {
            inner: ExperimentConfig::load(&path, &overrides).map_err(to_py)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (text, overrides=vec![]))]
    fn from_toml(text: &str, overrides: Vec<String>) -> PyResult<Self> {
        Ok(Self {
            inner: ExperimentConfig::from_toml_str(text, &overrides).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn presets() -> Vec<&'static str> {
        PRESETS.to_vec()
    }

    fn with_overrides(&self, overrides: Vec<String>) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.with_overrides(&overrides).map_err(to_py)?,
        })
    }

    fn to_toml(&self) -> PyResult<String> {
        self.inner.to_toml().map_err(to_py)
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    fn env(&self) -> PyResult<PyEnvSpec> {
        Ok(PyEnvSpec {
            inner: self.inner.env_spec().map_err(to_py)?,
        })
    }
}

/// Either a learned model or, when `None`, the configured environment itself.
fn with_dynamics<T>(
    cfg: &ExperimentConfig,
    model: Option<&PyDynamicsModel>,
    f: impl FnOnce(&dyn Dynamics) -> mbrl::error::Result<T>,
) -> PyResult<T> {
    match model {
        Some(m) => f(&m.inner),
        None => f(&OracleModel(cfg.env_spec().map_err(to_py)?)),
    }
    .map_err(to_py)
}

/// One planning step from `state`; returns `(actions, predicted_return)`.
#[pyfunction]
#[pyo3(signature = (config, state, model=None, seed=0))]
fn plan(
    py: Python<'_>,
    config: &PyExperimentConfig,
    state: Vec<f64>,
    model: Option<PyRef<'_, PyDynamicsModel>>,
    seed: u64,
) -> PyResult<(Vec<Vec<f64>>, f64)> {
    let cfg = &config.inner;
    let reward = cfg.reward().map_err(to_py)?;
    let mpc = cfg.mpc.config(seed);
    let model = model.as_deref();
    py.detach(|| {
        with_dynamics(cfg, model, |d| {
            random_shooting(d, &*reward, &state, &mpc).map(|r| (r.actions.0, r.predicted_return))
        })
    })
}

/// Path-following return of an action sequence predicted by a model.
#[pyfunction]
#[pyo3(signature = (model, state, actions, waypoints, alpha=1.0, beta=1.0))]
fn path_reward(
    model: &PyDynamicsModel,
    state: Vec<f64>,
    actions: Vec<Vec<f64>>,
    waypoints: Vec<[f64; 2]>,
    alpha: f64,
    beta: f64,
) -> PyResult<f64> {
    let reward = PathReward {
        path: PathSpec::new(waypoints, alpha, beta).map_err(to_py)?,
        x_index: 0,
        y_index: 1,
    };
    trajectory_reward(&model.inner, &state, &actions, &reward).map_err(to_py)
}

/// Trains on random data; returns the model and its validation errors.
#[pyfunction]
fn train_dynamics(py: Python<'_>, config: &PyExperimentConfig) -> PyResult<(PyDynamicsModel, Vec<(usize, f64)>)> {
    let cfg = &config.inner;
    let t = py.detach(|| cmds::train_on_random(cfg)).map_err(to_py)?;
    let errs = validation_errors(&t.model, &t.val, &mbrl::aggregation::reported_horizons(cfg.mpc.horizon));
    Ok((PyDynamicsModel { inner: t.model }, errs))
}

/// Full aggregation loop; returns the final model and per-iteration metrics.
#[pyfunction]
fn aggregate<'py>(py: Python<'py>, config: &PyExperimentConfig) -> PyResult<(PyDynamicsModel, Vec<Bound<'py, PyDict>>)> {
    let cfg = &config.inner;
    let outcome = py
        .detach(|| {
            let m = cfg.mbrl()?;
            let reward = cfg.reward()?;
            run_mbrl(&m, &*reward, cfg.seed, None)
        })
        .map_err(to_py)?;
    let metrics = outcome
        .metrics
        .iter()
        .map(|m| {
            let d = PyDict::new(py);
            d.set_item("iter", m.iter)?;
            d.set_item("env_steps_cumulative", m.env_steps_cumulative)?;
            d.set_item("mean_return", m.mean_return)?;
            d.set_item("val_errors", m.val_errors.clone())?;
            d.set_item("train_loss", m.train_loss)?;
            Ok(d)
        })
        .collect::<PyResult<_>>()?;
    Ok((PyDynamicsModel { inner: outcome.model }, metrics))
}

/// Runs a CLI command by name, writing artifacts to `out`.
///
/// `model` is a model path or `"oracle"`; `policy` a policy path; ablation takes
/// `axis` and `values`.
#[pyfunction]
#[pyo3(signature = (name, config, out, model=None, policy=None, axis=None, values=vec![]))]
#[allow(clippy::too_many_arguments)]
fn run_command(
    py: Python<'_>,
    name: &str,
    config: &PyExperimentConfig,
    out: PathBuf,
    model: Option<String>,
    policy: Option<PathBuf>,
    axis: Option<String>,
    values: Vec<String>,
) -> PyResult<()> {
    let cfg = &config.inner;
    let source = model.map(|m| if m == "oracle" { ModelSource::Oracle } else { ModelSource::File(m.into()) });
    let need_model = |what: &str| {
        source.clone().ok_or_else(|| PyValueError::new_err(format!("`{what}` needs model=<path> or model=\"oracle\"")))
    };
    match name {
        "train-dynamics" => py.detach(|| cmds::cmd_train_dynamics(cfg, &out).map(drop)),
        "validate" => {
            let src = need_model(name)?;
            py.detach(|| cmds::cmd_validate(cfg, &out, &src, None).map(drop))
        }
        "run-mpc" => {
            let src = need_model(name)?;
            py.detach(|| cmds::cmd_run_mpc(cfg, &out, &src).map(drop))
        }
        "aggregate" => py.detach(|| cmds::cmd_aggregate(cfg, &out).map(drop)),
        "follow-path" => py.detach(|| cmds::cmd_follow_path(cfg, &out, source.as_ref()).map(drop)),
        "imitate" => py.detach(|| cmds::cmd_imitate(cfg, &out, source.as_ref()).map(drop)),
        "finetune" => py.detach(|| cmds::cmd_finetune(cfg, &out, policy.as_deref()).map(drop)),
        "ablate" => {
            let axis: AblationAxis = axis
                .ok_or_else(|| PyValueError::new_err("ablate needs axis="))?
                .parse()
                .map_err(to_py)?;
            py.detach(|| cmds::cmd_ablate(cfg, &out, axis, &values).map(drop))
        }
        other => return Err(PyValueError::new_err(format!("unknown command `{other}`"))),
    }
    .map_err(to_py)
}

#[pymodule]
fn mbrl_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("MbrlError", m.py().get_type::<MbrlError>())?;
    m.add("__version__", cmds::version_string())?;
    m.add_class::<PyEnvSpec>()?;
    m.add_class::<PyDynamicsModel>()?;
    m.add_class::<PyGaussianPolicy>()?;
    m.add_class::<PyExperimentConfig>()?;
    m.add_function(wrap_pyfunction!(plan, m)?)?;
    m.add_function(wrap_pyfunction!(path_reward, m)?)?;
    m.add_function(wrap_pyfunction!(train_dynamics, m)?)?;
    m.add_function(wrap_pyfunction!(aggregate, m)?)?;
    m.add_function(wrap_pyfunction!(run_command, m)?)?;
    Ok(())
}
