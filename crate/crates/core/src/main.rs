use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mbrl::commands::{self, AblationAxis, ModelSource};
use mbrl::config::{ExperimentConfig, PRESETS};
use mbrl::error::{Error, Result};

#[derive(Parser)]
#[command(name = "mbrl", version = env!("CARGO_PKG_VERSION"), about = "Model-based RL with learned dynamics and random-shooting MPC")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunOpts {
    /// TOML experiment config; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in preset used when no config file is given.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Global seed; overrides the config value.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to `$MBRL_OUT_ROOT/<command>` or `runs/<command>`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Dotted `key=value` override, repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Evaluate shooting candidates on all cores; results are unchanged.
    #[arg(long)]
    parallel_shooting: bool,
}

#[derive(Args, Clone)]
struct ModelOpt {
    /// Saved dynamics model JSON.
    #[arg(long, conflicts_with = "oracle")]
    model: Option<PathBuf>,
    /// Use the true environment as the model.
    #[arg(long)]
    oracle: bool,
}

impl ModelOpt {
    fn source(&self) -> Option<ModelSource> {
        match (&self.model, self.oracle) {
            (_, true) => Some(ModelSource::Oracle),
            (Some(p), false) => Some(ModelSource::File(p.clone())),
            (None, false) => None,
        }
    }

    fn required(&self, command: &str) -> Result<ModelSource> {
        self.source().ok_or_else(|| Error::MissingArtifact {
            path: PathBuf::from("<model>"),
            hint: format!("`{command}` needs --model <file> (from `mbrl train-dynamics` or `mbrl aggregate`) or --oracle"),
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Fit a dynamics model on random rollouts.
    TrainDynamics(RunOpts),
    /// Report H-step prediction errors of a model.
    Validate {
        #[command(flatten)]
        run: RunOpts,
        #[command(flatten)]
        model: ModelOpt,
        /// Trajectory CSV to validate on; fresh random rollouts otherwise.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Run one MPC episode in the true environment.
    RunMpc {
        #[command(flatten)]
        run: RunOpts,
        #[command(flatten)]
        model: ModelOpt,
    },
    /// Iterate MPC data collection and model retraining.
    Aggregate(RunOpts),
    /// Follow a waypoint path with MPC.
    FollowPath {
        #[command(flatten)]
        run: RunOpts,
        #[command(flatten)]
        model: ModelOpt,
    },
    /// Clone the MPC controller into a policy and refine it with DAgger.
    Imitate {
        #[command(flatten)]
        run: RunOpts,
        #[command(flatten)]
        model: ModelOpt,
    },
    /// Policy-gradient fine-tuning of a saved or random policy.
    Finetune {
        #[command(flatten)]
        run: RunOpts,
        /// Policy JSON from `mbrl imitate`; random initialization otherwise.
        #[arg(long)]
        policy: Option<PathBuf>,
    },
    /// Sweep one hyperparameter across values and seeds.
    Ablate {
        #[command(flatten)]
        run: RunOpts,
        /// One of epochs, split, horizon_k, init_rollouts.
        #[arg(long)]
        axis: String,
        /// Comma-separated values, e.g. `20,50` or `1.0:0.0,0.1:0.9` or `1x500,10x500`.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
    /// List built-in presets.
    Presets,
}

fn load(run: &RunOpts) -> Result<ExperimentConfig> {
    let mut overrides = run.overrides.clone();
    if let Some(seed) = run.seed {
        overrides.push(format!("seed={seed}"));
    }
    if run.parallel_shooting {
        overrides.push("mpc.parallel=true".into());
    }
    match (&run.config, &run.preset) {
        (Some(path), _) => ExperimentConfig::load(path, &overrides),
        (None, Some(name)) => ExperimentConfig::preset(name)?.with_overrides(&overrides),
        (None, None) => ExperimentConfig::default().with_overrides(&overrides),
    }
}

fn out_dir(run: &RunOpts, cfg: &ExperimentConfig, command: &str) -> PathBuf {
    commands::resolve_out_dir(run.out.as_deref(), cfg, command)
}

fn check_file(path: &Path, hint: &str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::MissingArtifact {
            path: path.to_path_buf(),
            hint: hint.into(),
        })
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Presets => {
            for p in PRESETS {
                println!("{p}");
            }
        }
        Command::TrainDynamics(run) => {
            let cfg = load(&run)?;
            let out = out_dir(&run, &cfg, "train-dynamics");
            let s = commands::cmd_train_dynamics(&cfg, &out)?;
            println!("final train loss {:.6e}", s.final_loss);
            for (h, e) in &s.val_errors {
                println!("val error H={h}: {e:.6e}");
            }
            println!("model written to {}", s.model_path.display());
        }
        Command::Validate { run, model, data } => {
            let cfg = load(&run)?;
            let src = model.required("validate")?;
            let out = out_dir(&run, &cfg, "validate");
            for (h, e) in commands::cmd_validate(&cfg, &out, &src, data.as_deref())? {
                println!("H={h}: {e:.6e}");
            }
        }
        Command::RunMpc { run, model } => {
            let cfg = load(&run)?;
            let src = model.required("run-mpc")?;
            if let ModelSource::File(p) = &src {
                check_file(p, "train a model first with `mbrl train-dynamics` or `mbrl aggregate`")?;
            }
            let out = out_dir(&run, &cfg, "run-mpc");
            let ep = commands::cmd_run_mpc(&cfg, &out, &src)?;
            println!("return {:.4} over {} steps", ep.total_return(), ep.rewards.len());
        }
        Command::Aggregate(run) => {
            let cfg = load(&run)?;
            let out = out_dir(&run, &cfg, "aggregate");
            for m in commands::cmd_aggregate(&cfg, &out)? {
                println!("iter {} steps {} mean return {:.4}", m.iter, m.env_steps_cumulative, m.mean_return);
            }
        }
        Command::FollowPath { run, model } => {
            let cfg = load(&run)?;
            let out = out_dir(&run, &cfg, "follow-path");
            let s = commands::cmd_follow_path(&cfg, &out, model.source().as_ref())?;
            println!(
                "mean distance to path {:.4}, final distance to goal {:.4}",
                s.metrics.mean_perpendicular, s.metrics.final_distance
            );
        }
        Command::Imitate { run, model } => {
            let cfg = load(&run)?;
            let out = out_dir(&run, &cfg, "imitate");
            let s = commands::cmd_imitate(&cfg, &out, model.source().as_ref())?;
            if let Some(m) = s.clone_heldout_mse {
                println!("held-out clone MSE {m:.6e}");
            }
            for (i, m) in s.on_policy_mse.iter().enumerate() {
                println!("on-policy MSE after stage {i}: {m:.6e}");
            }
        }
        Command::Finetune { run, policy } => {
            let cfg = load(&run)?;
            if let Some(p) = &policy {
                check_file(p, "produce a policy with `mbrl imitate`, or omit --policy for a random start")?;
            }
            let out = out_dir(&run, &cfg, "finetune");
            let s = commands::cmd_finetune(&cfg, &out, policy.as_deref())?;
            if let Some(last) = s.log.last() {
                println!("final mean return {:.4} after {} steps", last.mean_return, last.env_steps_cumulative);
            }
        }
        Command::Ablate { run, axis, values } => {
            let cfg = load(&run)?;
            let axis: AblationAxis = axis.parse()?;
            let out = out_dir(&run, &cfg, "ablate");
            for r in commands::cmd_ablate(&cfg, &out, axis, &values)? {
                println!("{}={} seed {}: {} ({})", axis.name(), r.value, r.seed, r.final_return, r.status);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
