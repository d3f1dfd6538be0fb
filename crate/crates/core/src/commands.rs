//! Experiment commands behind the `mbrl` binary.
//!
//! Each command takes a validated [`ExperimentConfig`] and an output directory,
//! writes its artifacts there together with `config.toml` and `manifest.json`,
//! and returns an in-memory summary. All metric files are CSV.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::aggregation::{
    collect_initial_data, param_fingerprint, reported_horizons, run_mbrl, validation_errors, write_metrics_csv,
    IterationMetrics,
};
use crate::config::ExperimentConfig;
use crate::control::{mpc_run, write_episode_csv, write_waypoints_csv, MpcEpisode, PathReward, PathSpec};
use crate::dynamics::{
    read_transitions_csv, slice_trajectories, train_dynamics, write_transitions_csv, Dynamics, DynamicsModel,
    OracleModel, Provenance, Split, Trajectory, TransitionDataset,
};
use crate::envs::{collect_random_rollouts, sample_initial_state, EnvSpec, Environment, Exploration};
use crate::error::{Error, Result};
use crate::finetune::{policy_gradient_finetune, steps_to_fraction_of_final, FinetuneIteration};
use crate::imitation::{action_mse, behavioral_clone, collect_expert_rollouts, dagger_iterate, visit_states, GaussianPolicy};
use crate::nn::{AdamConfig, AdamState};
use crate::seeding;

/// Environment variable naming the default output root.
pub const OUT_ROOT_ENV: &str = "MBRL_OUT_ROOT";

pub fn version_string() -> String {
    format!("{} ({})", env!("CARGO_PKG_VERSION"), env!("MBRL_GIT_DESCRIBE"))
}

/// `--out` if given, else the config's `out_dir`, else `$MBRL_OUT_ROOT/<command>`
/// (or `runs/<command>`).
pub fn resolve_out_dir(explicit: Option<&Path>, cfg: &ExperimentConfig, command: &str) -> PathBuf {
    if let Some(p) = explicit {
        return p.to_path_buf();
    }
    if let Some(p) = &cfg.out_dir {
        return p.clone();
    }
    let root = std::env::var_os(OUT_ROOT_ENV).map_or_else(|| PathBuf::from("runs"), PathBuf::from);
    root.join(command)
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    seed: u64,
    version: String,
    args: &'a [(String, String)],
    config: &'a ExperimentConfig,
}

fn prepare(out: &Path, command: &str, cfg: &ExperimentConfig, args: &[(String, String)]) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let toml_path = out.join("config.toml");
    std::fs::write(&toml_path, cfg.to_toml()?).map_err(|e| Error::io(&toml_path, e))?;
    let manifest = Manifest {
        command,
        seed: cfg.seed,
        version: version_string(),
        args,
        config: cfg,
    };
    let path = out.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)?).map_err(|e| Error::io(&path, e))
}

fn write_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Where a command's dynamics come from.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSource {
    /// The true environment wrapped as a model.
    Oracle,
    File(PathBuf),
}

enum LoadedModel {
    Oracle(OracleModel<EnvSpec>),
    Learned(DynamicsModel),
}

impl LoadedModel {
    fn load(src: &ModelSource, env: &EnvSpec) -> Result<Self> {
        let m = match src {
            ModelSource::Oracle => LoadedModel::Oracle(OracleModel(*env)),
            ModelSource::File(p) => LoadedModel::Learned(DynamicsModel::load(p)?),
        };
        let d = m.dynamics();
        if d.state_dim() != env.state_dim() || d.action_dim() != env.action_dim() {
            return Err(Error::dim("model state for configured environment", env.state_dim(), d.state_dim()));
        }
        Ok(m)
    }

    fn dynamics(&self) -> &dyn Dynamics {
        match self {
            LoadedModel::Oracle(o) => o,
            LoadedModel::Learned(m) => m,
        }
    }
}

fn source_arg(src: &ModelSource) -> (String, String) {
    match src {
        ModelSource::Oracle => ("model".into(), "oracle".into()),
        ModelSource::File(p) => ("model".into(), p.display().to_string()),
    }
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub model: DynamicsModel,
    pub train: Vec<Trajectory>,
    pub val: Vec<Trajectory>,
    pub epoch_losses: Vec<f64>,
}

/// Random-data collection and off-policy training for `dynamics.epochs` epochs.
pub fn train_on_random(cfg: &ExperimentConfig) -> Result<TrainedModel> {
    let mbrl = cfg.mbrl()?;
    let env = &mbrl.env;
    let (train, val) = collect_initial_data(&mbrl, cfg.seed)?;
    let d_rand = slice_trajectories(&train, Provenance::Rand)?;
    let empty = TransitionDataset::empty(env.state_dim(), env.action_dim(), Provenance::Rl);
    let mut model = DynamicsModel::new(
        env.state_dim(),
        env.action_dim(),
        &mbrl.net.hidden,
        mbrl.net.activation,
        seeding::stream(cfg.seed, "net_init"),
    )?;
    let mut adam = AdamState::new(&model.net, AdamConfig::with_learning_rate(mbrl.net.learning_rate));
    let report = train_dynamics(
        &mut model,
        &d_rand,
        &empty,
        &mbrl.net.train_config(cfg.dynamics.epochs, Split::RAND_ONLY),
        &mut adam,
        seeding::child(seeding::stream(cfg.seed, "train"), 0),
    )?;
    Ok(TrainedModel {
        model,
        train,
        val,
        epoch_losses: report.epoch_losses,
    })
}

fn write_validation(out: &Path, errs: &[(usize, f64)]) -> Result<()> {
    write_rows(
        &out.join("validation.csv"),
        &["horizon", "error"],
        errs.iter().map(|(h, e)| vec![h.to_string(), e.to_string()]),
    )
}

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub final_loss: f64,
    pub val_errors: Vec<(usize, f64)>,
    pub model_path: PathBuf,
}

/// `train-dynamics`: collect random data, fit the model, report validation errors.
pub fn cmd_train_dynamics(cfg: &ExperimentConfig, out: &Path) -> Result<TrainSummary> {
    prepare(out, "train-dynamics", cfg, &[])?;
    let t = train_on_random(cfg)?;
    let model_path = out.join("model.json");
    t.model.save(&model_path)?;
    let tagged: Vec<(Provenance, &Trajectory)> = t.train.iter().map(|x| (Provenance::Rand, x)).collect();
    write_transitions_csv(&out.join("data.csv"), &tagged)?;
    let val: Vec<(Provenance, &Trajectory)> = t.val.iter().map(|x| (Provenance::Rand, x)).collect();
    if !val.is_empty() {
        write_transitions_csv(&out.join("val.csv"), &val)?;
    }
    write_rows(
        &out.join("train_loss.csv"),
        &["epoch", "loss"],
        t.epoch_losses.iter().enumerate().map(|(i, l)| vec![(i + 1).to_string(), l.to_string()]),
    )?;
    let val_errors = validation_errors(&t.model, &t.val, &reported_horizons(cfg.mpc.horizon));
    write_validation(out, &val_errors)?;
    Ok(TrainSummary {
        final_loss: t.epoch_losses.last().copied().unwrap_or(f64::NAN),
        val_errors,
        model_path,
    })
}

/// `validate`: H-step errors of a model on stored or freshly collected trajectories.
pub fn cmd_validate(cfg: &ExperimentConfig, out: &Path, model: &ModelSource, data: Option<&Path>) -> Result<Vec<(usize, f64)>> {
    let mut args = vec![source_arg(model)];
    if let Some(d) = data {
        args.push(("data".into(), d.display().to_string()));
    }
    prepare(out, "validate", cfg, &args)?;
    let env = cfg.env_spec()?;
    let loaded = LoadedModel::load(model, &env)?;
    let trajs: Vec<Trajectory> = match data {
        Some(p) => {
            if !p.exists() {
                return Err(Error::MissingArtifact {
                    path: p.to_path_buf(),
                    hint: "write trajectories with `mbrl train-dynamics` (val.csv or data.csv)".into(),
                });
            }
            read_transitions_csv(p)?.into_iter().map(|(_, t)| t).collect()
        }
        None => {
            let n = ((cfg.data.val_fraction * cfg.data.init_rollouts as f64).round() as usize).max(1);
            collect_random_rollouts(&env, n, cfg.data.init_rollout_length, seeding::stream(cfg.seed, "validate"), cfg.data.exploration)?
        }
    };
    let longest = trajs.iter().map(Trajectory::len).max().unwrap_or(0);
    let horizons: Vec<usize> = reported_horizons(cfg.mpc.horizon).into_iter().filter(|&h| h <= longest).collect();
    if horizons.is_empty() {
        return Err(Error::InvalidArgument("validation trajectories are shorter than every horizon".into()));
    }
    let errs = validation_errors(loaded.dynamics(), &trajs, &horizons);
    write_validation(out, &errs)?;
    Ok(errs)
}

fn episode_summary_rows(ep: &MpcEpisode) -> Vec<Vec<String>> {
    vec![vec![
        ep.rewards.len().to_string(),
        ep.total_return().to_string(),
        ep.nonfinite_candidates.to_string(),
    ]]
}

/// `run-mpc`: one receding-horizon episode in the true environment.
pub fn cmd_run_mpc(cfg: &ExperimentConfig, out: &Path, model: &ModelSource) -> Result<MpcEpisode> {
    prepare(out, "run-mpc", cfg, &[source_arg(model)])?;
    let env = cfg.env_spec()?;
    let loaded = LoadedModel::load(model, &env)?;
    let reward = cfg.reward()?;
    let s0 = sample_initial_state(&env, &mut seeding::rng(seeding::stream(cfg.seed, "mpc_init")), Exploration::Standard)?;
    let mpc = cfg.mpc.config(seeding::stream(cfg.seed, "shooting"));
    let ep = mpc_run(&env, loaded.dynamics(), &*reward, &s0, cfg.mpc.episode_length, &mpc)?;
    write_episode_csv(&out.join("episode.csv"), &ep)?;
    write_rows(&out.join("summary.csv"), &["steps", "total_return", "nonfinite_candidates"], episode_summary_rows(&ep))?;
    Ok(ep)
}

/// `aggregate`: the full aggregation loop with per-iteration checkpoints.
pub fn cmd_aggregate(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<IterationMetrics>> {
    prepare(out, "aggregate", cfg, &[])?;
    let mbrl = cfg.mbrl()?;
    let reward = cfg.reward()?;
    let ckpt = out.join("checkpoints");
    std::fs::create_dir_all(&ckpt).map_err(|e| Error::io(&ckpt, e))?;
    let mut hook = |m: &IterationMetrics, model: &DynamicsModel| model.save(&ckpt.join(format!("model_iter{}.json", m.iter)));
    let outcome = run_mbrl(&mbrl, &*reward, cfg.seed, Some(&mut hook))?;
    outcome.model.save(&out.join("model.json"))?;
    write_metrics_csv(&out.join("metrics.csv"), &outcome.metrics)?;
    write_rows(
        &out.join("params.csv"),
        &["iter", "params_before", "params_after"],
        outcome
            .metrics
            .iter()
            .map(|m| vec![m.iter.to_string(), m.params_before.clone(), m.params_after.clone()]),
    )?;
    Ok(outcome.metrics)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathMetrics {
    /// Mean distance of the visited positions to the path.
    pub mean_perpendicular: f64,
    /// Distance from the final position to the last waypoint.
    pub final_distance: f64,
    /// Arc coordinate reached at the end of the episode.
    pub final_progress: f64,
}

/// Path-following quality of the states `s_1..s_T` of an episode.
pub fn path_metrics(path: &PathSpec, xy: (usize, usize), states: &[Vec<f64>]) -> PathMetrics {
    let visited = if states.len() > 1 { &states[1..] } else { states };
    let pts: Vec<[f64; 2]> = visited.iter().map(|s| [s[xy.0], s[xy.1]]).collect();
    let mean_perpendicular = pts.iter().map(|p| path.distance(*p)).sum::<f64>() / pts.len().max(1) as f64;
    let last = pts.last().copied().unwrap_or([f64::NAN; 2]);
    let end = path.end_point();
    PathMetrics {
        mean_perpendicular,
        final_distance: (last[0] - end[0]).hypot(last[1] - end[1]),
        final_progress: path.arc_coordinate(last),
    }
}

#[derive(Debug, Clone)]
pub struct FollowSummary {
    pub episode: MpcEpisode,
    pub metrics: PathMetrics,
}

/// `follow-path`: track the configured waypoint path with the path reward.
pub fn cmd_follow_path(cfg: &ExperimentConfig, out: &Path, model: Option<&ModelSource>) -> Result<FollowSummary> {
    let args: Vec<(String, String)> = model.map(source_arg).into_iter().collect();
    prepare(out, "follow-path", cfg, &args)?;
    let env = cfg.env_spec()?;
    let xy = env
        .xy_indices()
        .ok_or_else(|| Error::InvalidArgument(format!("follow-path needs a planar environment, `{}` has none", env.name())))?;
    let path = cfg.task.path_spec()?;
    write_waypoints_csv(&out.join("path.csv"), &path.waypoints)?;
    let loaded = match model {
        Some(src) => LoadedModel::load(src, &env)?,
        None => {
            let t = train_on_random(cfg)?;
            t.model.save(&out.join("model.json"))?;
            LoadedModel::Learned(t.model)
        }
    };
    let reward = PathReward {
        path: path.clone(),
        x_index: xy.0,
        y_index: xy.1,
    };
    let s0 = sample_initial_state(&env, &mut seeding::rng(seeding::stream(cfg.seed, "mpc_init")), Exploration::Standard)?;
    let mpc = cfg.mpc.config(seeding::stream(cfg.seed, "shooting"));
    let episode = mpc_run(&env, loaded.dynamics(), &reward, &s0, cfg.mpc.episode_length, &mpc)?;
    write_episode_csv(&out.join("episode.csv"), &episode)?;
    let metrics = path_metrics(&path, xy, &episode.states());
    write_rows(
        &out.join("follow_summary.csv"),
        &["steps", "total_return", "mean_perpendicular", "final_distance", "final_progress", "path_length"],
        [vec![
            episode.rewards.len().to_string(),
            episode.total_return().to_string(),
            metrics.mean_perpendicular.to_string(),
            metrics.final_distance.to_string(),
            metrics.final_progress.to_string(),
            path.total_length().to_string(),
        ]],
    )?;
    Ok(FollowSummary { episode, metrics })
}

#[derive(Debug, Clone)]
pub struct ImitationSummary {
    pub policy: GaussianPolicy,
    pub expert_returns: Vec<f64>,
    pub clone_heldout_mse: Option<f64>,
    /// Policy-vs-expert MSE on the policy's own states, after cloning and after each DAgger iteration.
    pub on_policy_mse: Vec<f64>,
}

/// `imitate`: clone the MPC expert and refine with DAgger.
pub fn cmd_imitate(cfg: &ExperimentConfig, out: &Path, model: Option<&ModelSource>) -> Result<ImitationSummary> {
    let args: Vec<(String, String)> = model.map(source_arg).into_iter().collect();
    prepare(out, "imitate", cfg, &args)?;
    let env = cfg.env_spec()?;
    let reward = cfg.reward()?;
    let loaded = match model {
        Some(src) => LoadedModel::load(src, &env)?,
        None => {
            let outcome = run_mbrl(&cfg.mbrl()?, &*reward, cfg.seed, None)?;
            outcome.model.save(&out.join("model.json"))?;
            LoadedModel::Learned(outcome.model)
        }
    };
    let dyn_model = loaded.dynamics();
    let mpc = cfg.mpc.config(seeding::stream(cfg.seed, "expert_shooting"));
    let im = &cfg.imitation;
    let (mut expert, expert_returns) =
        collect_expert_rollouts(&env, dyn_model, &*reward, &mpc, &im.expert(), seeding::stream(cfg.seed, "expert"))?;
    let mut policy = GaussianPolicy::new(
        env.state_dim(),
        env.action_dim(),
        &im.policy_hidden,
        im.policy_std,
        seeding::stream(cfg.seed, "policy_init"),
    )?;
    let clone = behavioral_clone(&mut policy, &expert, &im.clone_config(im.clone_epochs), seeding::stream(cfg.seed, "clone"))?;
    let ckpt = out.join("checkpoints");
    std::fs::create_dir_all(&ckpt).map_err(|e| Error::io(&ckpt, e))?;
    policy.save(&ckpt.join("policy_clone.json"))?;

    let fmt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
    let mut rows = vec![vec![
        "clone".to_string(),
        "0".into(),
        expert.len().to_string(),
        fmt(clone.heldout_mse),
        String::new(),
    ]];
    let mut on_policy = Vec::new();
    let dagger = im.dagger();
    let dagger_seed = seeding::stream(cfg.seed, "dagger");
    for iter in 0..dagger.iters {
        let single = crate::imitation::DaggerConfig { iters: 1, ..dagger };
        let it = dagger_iterate(
            &mut policy,
            &env,
            dyn_model,
            &*reward,
            &mpc,
            &mut expert,
            &single,
            seeding::child(dagger_seed, iter as u64),
        )?;
        let it = &it[0];
        on_policy.push(it.on_policy_mse);
        policy.save(&ckpt.join(format!("policy_dagger{iter}.json")))?;
        rows.push(vec![
            "dagger".into(),
            (iter + 1).to_string(),
            expert.len().to_string(),
            fmt(it.clone.heldout_mse),
            it.on_policy_mse.to_string(),
        ]);
    }
    // Final policy scored on its own state distribution.
    let states = visit_states(&policy, &env, dagger.rollouts_per_iter.max(1), dagger.rollout_length, seeding::stream(cfg.seed, "imitate_eval"))?;
    let labels = crate::imitation::label_states(dyn_model, &*reward, &mpc, &states, seeding::stream(cfg.seed, "imitate_eval_label"))?;
    let final_mse = action_mse(&policy, &labels.states, &labels.labels)?;
    on_policy.push(final_mse);
    rows.push(vec!["final".into(), dagger.iters.to_string(), expert.len().to_string(), String::new(), final_mse.to_string()]);
    write_rows(&out.join("imitation.csv"), &["stage", "iter", "dataset_size", "heldout_mse", "on_policy_mse"], rows)?;
    policy.save(&out.join("policy.json"))?;
    Ok(ImitationSummary {
        policy,
        expert_returns,
        clone_heldout_mse: clone.heldout_mse,
        on_policy_mse: on_policy,
    })
}

#[derive(Debug, Clone)]
pub struct FinetuneSummary {
    pub log: Vec<FinetuneIteration>,
    pub steps_to_80_percent: Option<usize>,
}

/// `finetune`: policy-gradient fine-tuning from a saved policy or a random one.
pub fn cmd_finetune(cfg: &ExperimentConfig, out: &Path, policy: Option<&Path>) -> Result<FinetuneSummary> {
    let args: Vec<(String, String)> = vec![(
        "policy".into(),
        policy.map_or_else(|| "random".into(), |p| p.display().to_string()),
    )];
    prepare(out, "finetune", cfg, &args)?;
    let env = cfg.env_spec()?;
    let reward = cfg.reward()?;
    let mut pi = match policy {
        Some(p) => GaussianPolicy::load(p)?,
        None => GaussianPolicy::new(
            env.state_dim(),
            env.action_dim(),
            &cfg.imitation.policy_hidden,
            cfg.imitation.policy_std,
            seeding::stream(cfg.seed, "policy_init_random"),
        )?,
    };
    let log = policy_gradient_finetune(&mut pi, &env, &*reward, &cfg.finetune, seeding::stream(cfg.seed, "finetune"))?;
    write_rows(
        &out.join("finetune.csv"),
        &["iter", "env_steps_cumulative", "mean_return"],
        log.iter()
            .map(|l| vec![l.iter.to_string(), l.env_steps_cumulative.to_string(), l.mean_return.to_string()]),
    )?;
    pi.save(&out.join("policy_finetuned.json"))?;
    Ok(FinetuneSummary {
        steps_to_80_percent: steps_to_fraction_of_final(&log, 0.8, 5),
        log,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AblationAxis {
    Epochs,
    Split,
    HorizonK,
    InitRollouts,
}

impl std::str::FromStr for AblationAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "epochs" => Ok(Self::Epochs),
            "split" => Ok(Self::Split),
            "horizon_k" => Ok(Self::HorizonK),
            "init_rollouts" => Ok(Self::InitRollouts),
            other => Err(Error::InvalidArgument(format!(
                "unknown ablation axis `{other}` (epochs, split, horizon_k, init_rollouts)"
            ))),
        }
    }
}

impl AblationAxis {
    pub fn name(self) -> &'static str {
        match self {
            Self::Epochs => "epochs",
            Self::Split => "split",
            Self::HorizonK => "horizon_k",
            Self::InitRollouts => "init_rollouts",
        }
    }

    /// Overrides for one axis value: `20`, `0.1:0.9`, `10x500`, `25`.
    pub fn overrides(self, value: &str) -> Result<Vec<String>> {
        let bad = |why: &str| Error::InvalidArgument(format!("{} value `{value}`: {why}", self.name()));
        let int = |s: &str| s.trim().parse::<usize>().map_err(|_| bad("expected a non-negative integer"));
        Ok(match self {
            Self::Epochs => vec![format!("aggregation.epochs_per_iter={}", int(value)?)],
            Self::InitRollouts => vec![format!("data.init_rollouts={}", int(value)?)],
            Self::Split => {
                let (a, b) = value.split_once(':').ok_or_else(|| bad("expected rand:rl"))?;
                let a: f64 = a.trim().parse().map_err(|_| bad("expected numbers"))?;
                let b: f64 = b.trim().parse().map_err(|_| bad("expected numbers"))?;
                vec![format!("aggregation.split=[{a:?}, {b:?}]")]
            }
            Self::HorizonK => {
                let (h, k) = value.split_once('x').ok_or_else(|| bad("expected HxK"))?;
                vec![format!("mpc.horizon={}", int(h)?), format!("mpc.num_candidates={}", int(k)?)]
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: String,
    pub seed: u64,
    pub final_return: f64,
    pub status: String,
}

/// `ablate`: one aggregation run per (value, seed); failures are recorded, not fatal.
pub fn cmd_ablate(cfg: &ExperimentConfig, out: &Path, axis: AblationAxis, values: &[String]) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("ablation needs at least one value".into()));
    }
    let args = vec![("axis".to_string(), axis.name().to_string()), ("values".to_string(), values.join(";"))];
    prepare(out, "ablate", cfg, &args)?;
    // Every value is validated before any run starts.
    let mut runs = Vec::new();
    for v in values {
        let variant = cfg.with_overrides(&axis.overrides(v)?)?;
        for &seed in &cfg.ablate.seeds {
            let mut c = variant.clone();
            c.seed = seed;
            runs.push((v.clone(), c));
        }
    }
    let rows: Vec<SweepRow> = runs
        .par_iter()
        .map(|(v, c)| {
            let result = c.mbrl().and_then(|m| {
                let reward = c.reward()?;
                run_mbrl(&m, &*reward, c.seed, None)
            });
            match result {
                Ok(o) => SweepRow {
                    value: v.clone(),
                    seed: c.seed,
                    final_return: o.final_return().unwrap_or(f64::NAN),
                    status: "ok".into(),
                },
                Err(e) => SweepRow {
                    value: v.clone(),
                    seed: c.seed,
                    final_return: f64::NAN,
                    status: format!("error: {e}"),
                },
            }
        })
        .collect();
    write_rows(
        &out.join("sweep.csv"),
        &["axis", "value", "seed", "final_return", "status"],
        rows.iter().map(|r| {
            vec![axis.name().into(), r.value.clone(), r.seed.to_string(), r.final_return.to_string(), r.status.clone()]
        }),
    )?;
    Ok(rows)
}

/// Fingerprint of a saved model's parameters, for quick comparisons.
pub fn model_fingerprint(path: &Path) -> Result<String> {
    Ok(param_fingerprint(&DynamicsModel::load(path)?.net))
}
