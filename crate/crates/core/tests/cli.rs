use std::path::Path;
use std::process::{Command, Output};

const SMALL: &[&str] = &[
    "data.init_rollouts=10",
    "data.init_rollout_length=40",
    "dynamics.hidden=[16,16]",
    "dynamics.epochs=3",
    "mpc.horizon=3",
    "mpc.num_candidates=30",
    "mpc.episode_length=20",
    "aggregation.max_iter=2",
    "aggregation.rollouts_per_iter=1",
    "aggregation.rollout_length=20",
    "aggregation.epochs_per_iter=2",
];

fn mbrl(args: &[&str], out: &Path) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_mbrl"));
    // Shared overrides go first so that a test's own overrides win.
    cmd.arg(args[0]).arg("--out").arg(out);
    for o in SMALL {
        cmd.args(["--override", o]);
    }
    cmd.args(&args[1..]);
    cmd.output().unwrap()
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn train_then_validate_and_run_mpc() {
    let dir = tempfile::tempdir().unwrap();
    let td = dir.path().join("td");
    ok(&mbrl(&["train-dynamics", "--seed", "3"], &td));
    for f in ["model.json", "data.csv", "val.csv", "train_loss.csv", "validation.csv", "manifest.json", "config.toml"] {
        assert!(td.join(f).exists(), "{f}");
    }
    let manifest: serde_json::Value = serde_json::from_slice(&read(&td.join("manifest.json"))).unwrap();
    assert_eq!(manifest["seed"], 3);
    assert_eq!(manifest["command"], "train-dynamics");
    assert!(manifest["version"].as_str().unwrap().starts_with(env!("CARGO_PKG_VERSION")));

    let model = td.join("model.json");
    let model = model.to_str().unwrap();
    let v = dir.path().join("v");
    ok(&mbrl(&["validate", "--model", model, "--data", td.join("val.csv").to_str().unwrap()], &v));
    let text = String::from_utf8(read(&v.join("validation.csv"))).unwrap();
    assert!(text.starts_with("horizon,error\n1,"));

    let m = dir.path().join("m");
    ok(&mbrl(&["run-mpc", "--model", model], &m));
    let episode = String::from_utf8(read(&m.join("episode.csv"))).unwrap();
    assert_eq!(episode.lines().count(), 21);
}

#[test]
fn oracle_validation_is_exactly_zero() {
    let dir = tempfile::tempdir().unwrap();
    ok(&mbrl(&["validate", "--oracle"], dir.path()));
    let text = String::from_utf8(read(&dir.path().join("validation.csv"))).unwrap();
    for line in text.lines().skip(1) {
        assert_eq!(line.split(',').nth(1), Some("0"), "{line}");
    }
}

#[test]
fn missing_artifacts_exit_nonzero_with_hint() {
    let dir = tempfile::tempdir().unwrap();
    let out = mbrl(&["run-mpc", "--model", "does/not/exist.json"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("mbrl train-dynamics"));
    let out = mbrl(&["run-mpc"], dir.path());
    assert!(!out.status.success());
    let out = mbrl(&["finetune", "--policy", "nope.json"], dir.path());
    assert!(String::from_utf8_lossy(&out.stderr).contains("mbrl imitate"));
    let out = mbrl(&["aggregate", "--config", "nope.toml"], dir.path());
    assert!(!out.status.success());
}

#[test]
fn invalid_values_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let out = mbrl(&["aggregate", "--override", "mpc.num_candidates=-5"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("num_candidates"));
}

#[test]
fn aggregate_is_byte_reproducible_and_leaves_config_untouched() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    let text = "seed = 5\n[task]\nkind = \"navigate\"\ngoal = [0.5, 0.5]\n";
    std::fs::write(&cfg, text).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&mbrl(&["aggregate", "--config", cfg.to_str().unwrap()], &a));
    ok(&mbrl(&["aggregate", "--config", cfg.to_str().unwrap()], &b));
    assert_eq!(read(&a.join("metrics.csv")), read(&b.join("metrics.csv")));
    assert_eq!(read(&a.join("model.json")), read(&b.join("model.json")));
    assert!(a.join("checkpoints/model_iter1.json").exists());
    assert_eq!(std::fs::read_to_string(&cfg).unwrap(), text);
    let snapshot = std::fs::read_to_string(a.join("config.toml")).unwrap();
    assert!(snapshot.contains("kind = \"navigate\""));
}

#[test]
fn single_value_single_seed_sweep_has_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = mbrl(&["ablate", "--axis", "horizon_k", "--values", "2x20", "--override", "ablate.seeds=[1]"], dir.path());
    ok(&out);
    let text = String::from_utf8(read(&dir.path().join("sweep.csv"))).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "axis,value,seed,final_return,status");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("horizon_k,2x20,1,") && lines[1].ends_with(",ok"));
    let bad = mbrl(&["ablate", "--axis", "split", "--values", "0.5"], dir.path());
    assert!(!bad.status.success());
}

#[test]
fn follow_path_imitate_and_finetune_produce_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let fp = dir.path().join("fp");
    ok(&mbrl(&["follow-path", "--preset", "swimmer_trajectory", "--override", "mpc.num_candidates=50"], &fp));
    for f in ["path.csv", "episode.csv", "follow_summary.csv", "model.json"] {
        assert!(fp.join(f).exists(), "{f}");
    }
    let im = dir.path().join("im");
    let extra = [
        "imitate",
        "--oracle",
        "--override",
        "imitation.expert_rollouts=2",
        "--override",
        "imitation.expert_rollout_length=20",
        "--override",
        "imitation.dagger_iters=1",
        "--override",
        "imitation.dagger_rollouts_per_iter=1",
        "--override",
        "imitation.dagger_rollout_length=20",
        "--override",
        "imitation.clone_epochs=2",
        "--override",
        "imitation.dagger_epochs_per_iter=2",
    ];
    ok(&mbrl(&extra, &im));
    let policy = im.join("policy.json");
    assert!(im.join("imitation.csv").exists() && policy.exists());
    let ft = dir.path().join("ft");
    ok(&mbrl(
        &["finetune", "--policy", policy.to_str().unwrap(), "--override", "finetune.iterations=2", "--override", "finetune.episode_length=10"],
        &ft,
    ));
    let text = String::from_utf8(read(&ft.join("finetune.csv"))).unwrap();
    assert_eq!(text.lines().next(), Some("iter,env_steps_cumulative,mean_return"));
    assert_eq!(text.lines().count(), 3);
}
