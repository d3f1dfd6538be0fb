//! TOML experiment configuration.
//!
//! Every section is optional and filled from defaults; unknown keys are errors.
//! A file may name a `preset`, whose values it then overrides. `--override
//! key=value` pairs address fields by dotted path and are applied last.
//!
//! ```toml
//! preset = "point_mass_forward"
//! seed = 3
//!
//! [mpc]
//! horizon = 15
//!
//! [aggregation]
//! split = [0.1, 0.9]
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::aggregation::{AggregationConfig, DynamicsNetConfig, MbrlConfig};
use crate::control::{named_path, read_waypoints_csv, ForwardReward, MpcConfig, NavigateReward, PathReward, PathSpec, Reward, UprightReward};
use crate::dynamics::{NoiseSpace, Split};
use crate::envs::{
    EnvKind, EnvSpec, Exploration, ForwardRewardParams, PendulumParams, PointMassParams, UnicycleParams,
    INIT_NOISE_VARIANCE,
};
use crate::error::{Error, Result};
use crate::finetune::FinetuneConfig;
use crate::imitation::{CloneConfig, DaggerConfig, ExpertConfig, EXPERT_NOISE_SIGMA};
use crate::nn::Activation;

pub const PRESETS: [&str; 5] = [
    "point_mass_forward",
    "point_mass_navigate",
    "swimmer_forward",
    "swimmer_trajectory",
    "pendulum_swingup",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvName {
    PointMass,
    Unicycle,
    Pendulum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvSection {
    pub name: EnvName,
    /// Defaults per environment: point_mass 0.05, unicycle 0.1, pendulum 0.05.
    pub dt: Option<f64>,
    pub init_noise_variance: f64,
    pub point_mass: PointMassParams,
    pub unicycle: UnicycleParams,
    pub pendulum: PendulumParams,
}

impl Default for EnvSection {
    fn default() -> Self {
        Self {
            name: EnvName::PointMass,
            dt: None,
            init_noise_variance: INIT_NOISE_VARIANCE,
            point_mass: PointMassParams::default(),
            unicycle: UnicycleParams::default(),
            pendulum: PendulumParams::default(),
        }
    }
}

impl EnvSection {
    pub fn spec(&self) -> Result<EnvSpec> {
        let (kind, default_dt) = match self.name {
            EnvName::PointMass => (EnvKind::PointMass2D(self.point_mass), 0.05),
            EnvName::Unicycle => (EnvKind::Unicycle(self.unicycle), 0.1),
            EnvName::Pendulum => (EnvKind::Pendulum(self.pendulum), 0.05),
        };
        let spec = EnvSpec::new(kind, self.dt.unwrap_or(default_dt))
            .map_err(|e| field("env.dt", e.to_string()))?
            .with_init_noise_variance(self.init_noise_variance);
        spec.validate().map_err(|e| field("env", e.to_string()))?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    /// `s'^xvel − c‖a/d‖²`.
    Forward,
    /// `−‖p' − goal‖ − action_cost·‖a‖²`.
    Navigate,
    /// Path-following reward over waypoints.
    FollowPath,
    /// Pendulum swing-up.
    Upright,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskSection {
    pub kind: TaskKind,
    pub c: f64,
    pub d: f64,
    pub goal: [f64; 2],
    pub action_cost: f64,
    /// CSV of `x,y` waypoints; takes precedence over `path`.
    pub path_file: Option<PathBuf>,
    /// Named path shape (straight, left_turn, right_turn, u_turn, square).
    pub path: String,
    pub path_scale: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for TaskSection {
    fn default() -> Self {
        Self {
            kind: TaskKind::Forward,
            c: 0.05,
            d: 1.0,
            goal: [1.0, 1.0],
            action_cost: 0.0,
            path_file: None,
            path: "left_turn".into(),
            path_scale: 1.0,
            alpha: 1.0,
            beta: 1.0,
        }
    }
}

impl TaskSection {
    pub fn path_spec(&self) -> Result<PathSpec> {
        let pts = match &self.path_file {
            Some(p) => read_waypoints_csv(p).map_err(|e| field("task.path_file", e.to_string()))?,
            None => named_path(&self.path, self.path_scale).map_err(|e| field("task.path", e.to_string()))?,
        };
        PathSpec::new(pts, self.alpha, self.beta).map_err(|e| field("task.path", e.to_string()))
    }

    /// The reward for this task on `env`.
    pub fn reward(&self, env: &EnvSpec) -> Result<Box<dyn Reward>> {
        let xy = || {
            env.xy_indices()
                .ok_or_else(|| field("task.kind", format!("`{}` has no planar position", env.name())))
        };
        Ok(match self.kind {
            TaskKind::Forward => Box::new(ForwardReward {
                env: *env,
                params: ForwardRewardParams { c: self.c, d: self.d },
            }),
            TaskKind::Navigate => {
                let (x_index, y_index) = xy()?;
                Box::new(NavigateReward {
                    goal: self.goal,
                    action_cost: self.action_cost,
                    x_index,
                    y_index,
                })
            }
            TaskKind::FollowPath => {
                let (x_index, y_index) = xy()?;
                Box::new(PathReward {
                    path: self.path_spec()?,
                    x_index,
                    y_index,
                })
            }
            TaskKind::Upright => Box::new(UprightReward {
                action_cost: self.action_cost,
            }),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub init_rollouts: usize,
    pub init_rollout_length: usize,
    pub exploration: Exploration,
    pub val_fraction: f64,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            init_rollouts: 20,
            init_rollout_length: 100,
            exploration: Exploration::Standard,
            val_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsSection {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub noise_sigma: f64,
    pub noise_space: NoiseSpace,
    /// Epochs for stand-alone training (`train-dynamics`, `follow-path`).
    pub epochs: usize,
}

impl Default for DynamicsSection {
    fn default() -> Self {
        Self {
            hidden: vec![128, 128],
            activation: Activation::Relu,
            learning_rate: 1e-3,
            batch_size: 512,
            noise_sigma: 0.001,
            noise_space: NoiseSpace::Normalized,
            epochs: 50,
        }
    }
}

impl DynamicsSection {
    pub fn net(&self) -> DynamicsNetConfig {
        DynamicsNetConfig {
            hidden: self.hidden.clone(),
            activation: self.activation,
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            noise_sigma: self.noise_sigma,
            noise_space: self.noise_space,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MpcSection {
    pub horizon: usize,
    pub num_candidates: usize,
    pub discount: f64,
    pub parallel: bool,
    /// Steps of a stand-alone MPC or path-following episode.
    pub episode_length: usize,
}

impl Default for MpcSection {
    fn default() -> Self {
        let d = MpcConfig::default();
        Self {
            horizon: d.horizon,
            num_candidates: d.num_candidates,
            discount: d.discount,
            parallel: false,
            episode_length: 100,
        }
    }
}

impl MpcSection {
    pub fn config(&self, seed: u64) -> MpcConfig {
        MpcConfig {
            horizon: self.horizon,
            num_candidates: self.num_candidates,
            discount: self.discount,
            rng_seed: seed,
            parallel: self.parallel,
            ..MpcConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AggregationSection {
    pub max_iter: usize,
    pub rollouts_per_iter: usize,
    pub rollout_length: usize,
    pub epochs_per_iter: usize,
    /// `[rand, rl]` mini-batch fractions.
    pub split: [f64; 2],
}

impl Default for AggregationSection {
    fn default() -> Self {
        Self {
            max_iter: 3,
            rollouts_per_iter: 3,
            rollout_length: 100,
            epochs_per_iter: 20,
            split: [0.1, 0.9],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImitationSection {
    pub expert_rollouts: usize,
    pub expert_rollout_length: usize,
    pub action_noise_sigma: f64,
    pub policy_hidden: Vec<usize>,
    pub policy_std: f64,
    pub clone_epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub holdout_fraction: f64,
    pub normalize_observations: bool,
    pub dagger_iters: usize,
    pub dagger_rollouts_per_iter: usize,
    pub dagger_rollout_length: usize,
    pub dagger_epochs_per_iter: usize,
}

impl Default for ImitationSection {
    fn default() -> Self {
        Self {
            expert_rollouts: 30,
            expert_rollout_length: 100,
            action_noise_sigma: EXPERT_NOISE_SIGMA,
            policy_hidden: vec![64, 64],
            policy_std: 1.0,
            clone_epochs: 70,
            batch_size: 500,
            learning_rate: 1e-4,
            holdout_fraction: 0.1,
            normalize_observations: true,
            dagger_iters: 3,
            dagger_rollouts_per_iter: 5,
            dagger_rollout_length: 100,
            dagger_epochs_per_iter: 70,
        }
    }
}

impl ImitationSection {
    pub fn expert(&self) -> ExpertConfig {
        ExpertConfig {
            num_rollouts: self.expert_rollouts,
            rollout_length: self.expert_rollout_length,
            action_noise_sigma: self.action_noise_sigma,
        }
    }

    pub fn clone_config(&self, epochs: usize) -> CloneConfig {
        CloneConfig {
            epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            holdout_fraction: self.holdout_fraction,
            normalize_observations: self.normalize_observations,
        }
    }

    pub fn dagger(&self) -> DaggerConfig {
        DaggerConfig {
            iters: self.dagger_iters,
            rollouts_per_iter: self.dagger_rollouts_per_iter,
            rollout_length: self.dagger_rollout_length,
            clone: self.clone_config(self.dagger_epochs_per_iter),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblateSection {
    pub seeds: Vec<u64>,
}

impl Default for AblateSection {
    fn default() -> Self {
        Self { seeds: vec![0, 1, 2, 3, 4] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Preset the file was layered on, if any.
    pub preset: Option<String>,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub env: EnvSection,
    pub task: TaskSection,
    pub data: DataSection,
    pub dynamics: DynamicsSection,
    pub mpc: MpcSection,
    pub aggregation: AggregationSection,
    pub imitation: ImitationSection,
    pub finetune: FinetuneConfig,
    pub ablate: AblateSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            preset: None,
            seed: 0,
            out_dir: None,
            env: EnvSection::default(),
            task: TaskSection::default(),
            data: DataSection::default(),
            dynamics: DynamicsSection::default(),
            mpc: MpcSection::default(),
            aggregation: AggregationSection::default(),
            imitation: ImitationSection::default(),
            finetune: FinetuneConfig::default(),
            ablate: AblateSection::default(),
        }
    }
}

fn field(name: &str, reason: impl Into<String>) -> Error {
    Error::ConfigField {
        field: name.into(),
        reason: reason.into(),
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(field(name, format!("must be positive and finite, got {v}")))
    }
}

fn non_negative(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(field(name, format!("must be >= 0 and finite, got {v}")))
    }
}

fn at_least(name: &str, v: usize, min: usize) -> Result<()> {
    if v >= min {
        Ok(())
    } else {
        Err(field(name, format!("must be >= {min}, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn preset(name: &str) -> Result<Self> {
        let mut c = Self {
            preset: Some(name.into()),
            ..Self::default()
        };
        match name {
            "point_mass_forward" => {}
            "point_mass_navigate" => {
                c.task.kind = TaskKind::Navigate;
                c.task.goal = [1.0, 1.0];
                c.task.action_cost = 0.1;
            }
            "swimmer_forward" => {
                c.env.dt = Some(0.15);
                c.task.c = 0.5;
                c.task.d = 50.0;
                c.data.init_rollouts = 25;
                c.data.init_rollout_length = 333;
                c.dynamics.hidden = vec![500, 500];
                c.dynamics.epochs = 30;
                c.mpc.horizon = 20;
                c.mpc.num_candidates = 5000;
                c.mpc.episode_length = 333;
                c.aggregation = AggregationSection {
                    max_iter: 6,
                    rollouts_per_iter: 9,
                    rollout_length: 333,
                    epochs_per_iter: 30,
                    split: [0.1, 0.9],
                };
                c.imitation.expert_rollouts = 30;
                c.imitation.expert_rollout_length = 333;
                c.imitation.dagger_rollout_length = 333;
            }
            "swimmer_trajectory" => {
                c.env.name = EnvName::Unicycle;
                c.task.kind = TaskKind::FollowPath;
                c.data.init_rollouts = 200;
                c.data.init_rollout_length = 500;
                c.data.exploration = Exploration::HeadingSweep;
                c.dynamics.hidden = vec![500, 500];
                c.dynamics.epochs = 70;
                c.mpc.horizon = 5;
                c.mpc.num_candidates = 5000;
                c.mpc.episode_length = 300;
            }
            "pendulum_swingup" => {
                c.env.name = EnvName::Pendulum;
                c.task.kind = TaskKind::Upright;
                c.task.action_cost = 0.01;
                c.mpc.horizon = 20;
                c.mpc.episode_length = 200;
            }
            other => {
                return Err(field("preset", format!("unknown preset `{other}` (one of {})", PRESETS.join(", "))));
            }
        }
        Ok(c)
    }

    /// Parses TOML text, layers it on its preset and applies overrides.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        // Direct parse first: type errors and unknown keys carry source spans.
        let direct: ExperimentConfig = toml::from_str(text).map_err(|e| parse_error(text, &e))?;
        let file: toml::Table = toml::from_str(text).map_err(|e| parse_error(text, &e))?;
        let mut base = match &direct.preset {
            Some(name) => to_table(&Self::preset(name)?)?,
            None => to_table(&Self::default())?,
        };
        merge(&mut base, file);
        for o in overrides {
            apply_override(&mut base, o)?;
        }
        let cfg = from_merged(&base)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingArtifact {
                path: path.to_path_buf(),
                hint: "pass an existing TOML file to --config, or omit it to use defaults".into(),
            });
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, overrides)
    }

    /// Applies overrides to an in-memory config and revalidates.
    pub fn with_overrides(&self, overrides: &[String]) -> Result<Self> {
        let mut t = to_table(self)?;
        for o in overrides {
            apply_override(&mut t, o)?;
        }
        let cfg = from_merged(&t)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::ConfigParse(e.to_string()))
    }

    pub fn env_spec(&self) -> Result<EnvSpec> {
        self.env.spec()
    }

    pub fn reward(&self) -> Result<Box<dyn Reward>> {
        self.task.reward(&self.env_spec()?)
    }

    pub fn split(&self) -> Result<Split> {
        Split::new(self.aggregation.split[0], self.aggregation.split[1]).map_err(|e| field("aggregation.split", e.to_string()))
    }

    pub fn mbrl(&self) -> Result<MbrlConfig> {
        Ok(MbrlConfig {
            env: self.env_spec()?,
            init_rollouts: self.data.init_rollouts,
            init_rollout_length: self.data.init_rollout_length,
            exploration: self.data.exploration,
            val_fraction: self.data.val_fraction,
            net: self.dynamics.net(),
            aggregation: AggregationConfig {
                max_iter: self.aggregation.max_iter,
                rollouts_per_iter: self.aggregation.rollouts_per_iter,
                rollout_length: self.aggregation.rollout_length,
                epochs_per_iter: self.aggregation.epochs_per_iter,
                split: self.split()?,
                mpc: self.mpc.config(self.seed),
            },
        })
    }

    /// Checks every field against the preconditions of the operation that uses it.
    pub fn validate(&self) -> Result<()> {
        if self.seed > i64::MAX as u64 {
            return Err(field("seed", "must fit in a signed 64-bit integer"));
        }
        if let Some(v) = self.env.dt {
            positive("env.dt", v)?;
        }
        non_negative("env.init_noise_variance", self.env.init_noise_variance)?;
        let pm = &self.env.point_mass;
        positive("env.point_mass.mass", pm.mass)?;
        non_negative("env.point_mass.drag", pm.drag)?;
        positive("env.point_mass.force_scale", pm.force_scale)?;
        let u = &self.env.unicycle;
        positive("env.unicycle.accel_scale", u.accel_scale)?;
        positive("env.unicycle.turn_rate", u.turn_rate)?;
        non_negative("env.unicycle.drag", u.drag)?;
        let p = &self.env.pendulum;
        positive("env.pendulum.mass", p.mass)?;
        positive("env.pendulum.length", p.length)?;
        non_negative("env.pendulum.gravity", p.gravity)?;
        non_negative("env.pendulum.damping", p.damping)?;
        positive("env.pendulum.max_torque", p.max_torque)?;
        at_least("env.pendulum.substeps", p.substeps, 1)?;
        let env = self.env_spec()?;

        non_negative("task.c", self.task.c)?;
        positive("task.d", self.task.d)?;
        non_negative("task.action_cost", self.task.action_cost)?;
        if !(self.task.alpha.is_finite() && self.task.beta.is_finite()) {
            return Err(field("task.alpha", "path weights must be finite"));
        }
        positive("task.path_scale", self.task.path_scale)?;
        if let Some(p) = &self.task.path_file {
            if !p.exists() {
                return Err(field("task.path_file", format!("{} does not exist", p.display())));
            }
        }
        if self.task.kind == TaskKind::FollowPath || self.task.path_file.is_some() {
            self.task.path_spec()?;
        }
        self.task.reward(&env)?;
        if self.data.exploration == Exploration::HeadingSweep && env.heading_index().is_none() {
            return Err(field("data.exploration", format!("heading_sweep needs a heading; `{}` has none", env.name())));
        }

        at_least("data.init_rollouts", self.data.init_rollouts, 1)?;
        at_least("data.init_rollout_length", self.data.init_rollout_length, 2)?;
        if !(0.0..1.0).contains(&self.data.val_fraction) {
            return Err(field("data.val_fraction", "must lie in [0, 1)"));
        }

        if self.dynamics.hidden.contains(&0) {
            return Err(field("dynamics.hidden", "layer sizes must be positive"));
        }
        positive("dynamics.learning_rate", self.dynamics.learning_rate)?;
        at_least("dynamics.batch_size", self.dynamics.batch_size, 1)?;
        non_negative("dynamics.noise_sigma", self.dynamics.noise_sigma)?;

        at_least("mpc.horizon", self.mpc.horizon, 1)?;
        at_least("mpc.num_candidates", self.mpc.num_candidates, 1)?;
        if !(0.0..=1.0).contains(&self.mpc.discount) {
            return Err(field("mpc.discount", format!("must lie in [0, 1], got {}", self.mpc.discount)));
        }
        at_least("mpc.episode_length", self.mpc.episode_length, 1)?;
        self.split()?;

        let im = &self.imitation;
        non_negative("imitation.action_noise_sigma", im.action_noise_sigma)?;
        positive("imitation.policy_std", im.policy_std)?;
        if im.policy_hidden.contains(&0) {
            return Err(field("imitation.policy_hidden", "layer sizes must be positive"));
        }
        at_least("imitation.batch_size", im.batch_size, 1)?;
        positive("imitation.learning_rate", im.learning_rate)?;
        if !(0.0..1.0).contains(&im.holdout_fraction) {
            return Err(field("imitation.holdout_fraction", "must lie in [0, 1)"));
        }
        at_least("imitation.expert_rollout_length", im.expert_rollout_length, 1)?;
        at_least("imitation.dagger_rollout_length", im.dagger_rollout_length, 1)?;

        let ft = &self.finetune;
        at_least("finetune.batch_episodes", ft.batch_episodes, 1)?;
        at_least("finetune.episode_length", ft.episode_length, 1)?;
        non_negative("finetune.learning_rate", ft.learning_rate)?;
        if self.ablate.seeds.is_empty() {
            return Err(field("ablate.seeds", "need at least one seed"));
        }
        Ok(())
    }
}

fn parse_error(text: &str, e: &toml::de::Error) -> Error {
    match e.span() {
        Some(span) => {
            let line = text[..span.start.min(text.len())].matches('\n').count() + 1;
            let src = text.lines().nth(line - 1).unwrap_or("").trim();
            Error::ConfigParse(format!("line {line} (`{src}`): {}", e.message().trim()))
        }
        None => Error::ConfigParse(e.message().trim().to_string()),
    }
}

/// Deserializes a merged table. Type errors are reported against the dotted key,
/// recovered from the span in the table's own TOML rendering.
fn from_merged(table: &toml::Table) -> Result<ExperimentConfig> {
    let text = toml::to_string(table).map_err(|e| Error::ConfigParse(e.to_string()))?;
    toml::from_str(&text).map_err(|e: toml::de::Error| {
        let Some(span) = e.span() else {
            return Error::ConfigParse(e.message().trim().to_string());
        };
        let before = &text[..span.start.min(text.len())];
        let line = before.lines().last().unwrap_or("");
        let key = line.split('=').next().unwrap_or("").trim();
        let section = before
            .lines()
            .rev()
            .find_map(|l| l.trim().strip_prefix('[').and_then(|l| l.strip_suffix(']')));
        let field = match section {
            Some(sec) if !key.is_empty() => format!("{sec}.{key}"),
            _ => key.to_string(),
        };
        Error::ConfigField {
            field,
            reason: e.message().trim().to_string(),
        }
    })
}

fn to_table(cfg: &ExperimentConfig) -> Result<toml::Table> {
    toml::Table::try_from(cfg).map_err(|e| Error::ConfigParse(e.to_string()))
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// `a.b.c=value`; the value is read as a TOML literal, falling back to a string.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| field(spec, "override must look like key=value"))?;
    let path = path.trim();
    let raw = raw.trim();
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let keys: Vec<&str> = path.split('.').collect();
    let mut cur = table;
    for k in &keys[..keys.len() - 1] {
        cur = match cur.entry(k.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new())) {
            toml::Value::Table(t) => t,
            _ => return Err(field(path, format!("`{k}` is not a section"))),
        };
    }
    cur.insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let c = ExperimentConfig::from_toml_str("", &[]).unwrap();
        assert_eq!((c.mpc.horizon, c.mpc.num_candidates, c.mpc.discount), (10, 1000, 1.0));
        assert_eq!(c, ExperimentConfig::default());
    }

    #[test]
    fn swimmer_preset_matches_hyperparameter_table() {
        let c = ExperimentConfig::from_toml_str("preset = \"swimmer_forward\"", &[]).unwrap();
        assert_eq!(c.aggregation.epochs_per_iter, 30);
        assert_eq!(c.aggregation.max_iter, 6);
        assert_eq!(c.aggregation.rollouts_per_iter, 9);
        assert_eq!((c.data.init_rollouts, c.data.init_rollout_length), (25, 333));
        assert_eq!((c.mpc.horizon, c.mpc.num_candidates), (20, 5000));
        assert_eq!(c.aggregation.split, [0.1, 0.9]);
        assert_eq!((c.imitation.dagger_iters, c.imitation.dagger_rollouts_per_iter, c.imitation.expert_rollouts), (3, 5, 30));
    }

    #[test]
    fn file_values_override_preset() {
        let c = ExperimentConfig::from_toml_str("preset = \"swimmer_forward\"\n[mpc]\nhorizon = 7\n", &[]).unwrap();
        assert_eq!((c.mpc.horizon, c.mpc.num_candidates), (7, 5000));
    }

    #[test]
    fn negative_k_names_field_and_line() {
        let err = ExperimentConfig::from_toml_str("seed = 1\n[mpc]\nnum_candidates = -5\n", &[]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3") && msg.contains("num_candidates"), "{msg}");
        let err = ExperimentConfig::from_toml_str("[mpc]\nnum_candidates = 0\n", &[]).unwrap_err();
        assert!(matches!(err, Error::ConfigField { ref field, .. } if field == "mpc.num_candidates"), "{err}");
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = ExperimentConfig::from_toml_str("[mpc]\nhorizn = 3\n", &[]).unwrap_err();
        assert!(err.to_string().contains("horizn"), "{err}");
        assert!(ExperimentConfig::from_toml_str("bogus = 1\n", &[]).is_err());
    }

    #[test]
    fn overrides_by_dotted_path() {
        let c = ExperimentConfig::from_toml_str(
            "",
            &["mpc.horizon=3".into(), "task.kind=navigate".into(), "aggregation.split=[1.0, 0.0]".into()],
        )
        .unwrap();
        assert_eq!(c.mpc.horizon, 3);
        assert_eq!(c.task.kind, TaskKind::Navigate);
        assert_eq!(c.split().unwrap(), Split::RAND_ONLY);
        assert!(ExperimentConfig::from_toml_str("", &["mpc.horizon".into()]).is_err());
        assert!(ExperimentConfig::from_toml_str("", &["mpc.discount=2.0".into()]).is_err());
    }

    #[test]
    fn all_presets_validate_and_roundtrip() {
        for p in PRESETS {
            let c = ExperimentConfig::preset(p).unwrap();
            c.validate().unwrap();
            let back = ExperimentConfig::from_toml_str(&c.to_toml().unwrap(), &[]).unwrap();
            assert_eq!(back, c, "{p}");
        }
        assert!(ExperimentConfig::preset("hopper").is_err());
    }

    #[test]
    fn missing_path_file_rejected() {
        let err = ExperimentConfig::from_toml_str("[task]\nkind = \"follow_path\"\npath_file = \"/nonexistent/p.csv\"\n", &[]);
        assert!(matches!(err, Err(Error::ConfigField { ref field, .. }) if field == "task.path_file"));
    }

    #[test]
    fn heading_sweep_needs_heading() {
        let err = ExperimentConfig::from_toml_str("[data]\nexploration = \"heading_sweep\"\n", &[]).unwrap_err();
        assert!(matches!(err, Error::ConfigField { ref field, .. } if field == "data.exploration"));
        let ok = "[env]\nname = \"unicycle\"\n[data]\nexploration = \"heading_sweep\"\n";
        ExperimentConfig::from_toml_str(ok, &[]).unwrap();
    }
}
