"""Exercises the bindings end to end on a tiny configuration."""

import math
import tempfile
from pathlib import Path

import mbrl_py

SMALL = [
    "data.init_rollouts=10",
    "data.init_rollout_length=40",
    "dynamics.hidden=[16,16]",
    "dynamics.epochs=3",
    "mpc.horizon=4",
    "mpc.num_candidates=32",
    "mpc.episode_length=20",
    "aggregation.max_iter=1",
    "aggregation.rollouts_per_iter=1",
    "aggregation.rollout_length=20",
    "aggregation.epochs_per_iter=2",
]


def main() -> None:
    env = mbrl_py.EnvSpec("point_mass")
    assert (env.state_dim, env.action_dim) == (4, 2)
    nxt = env.step([0.0, 0.0, 0.0, 0.0], [1.0, 0.0])
    assert nxt[2] > 0.0

    trajs = env.random_rollouts(3, 10, seed=7)
    assert len(trajs) == 3 and len(trajs[0][0]) == 10

    cfg = mbrl_py.ExperimentConfig("point_mass_forward", SMALL)
    assert "point_mass_forward" in mbrl_py.ExperimentConfig.presets()
    try:
        cfg.with_overrides(["mpc.num_candidates=-5"])
    except ValueError as e:
        assert "num_candidates" in str(e)
    else:
        raise AssertionError("negative K accepted")

    actions, ret = mbrl_py.plan(cfg, [0.0] * 4, seed=1)
    assert len(actions) == 4 and math.isfinite(ret)

    model, errs = mbrl_py.train_dynamics(cfg)
    assert all(math.isfinite(e) for _, e in errs)
    assert len(model.predict([0.0] * 4, [0.0, 0.0])) == 4

    final, metrics = mbrl_py.aggregate(cfg)
    assert metrics and metrics[-1]["env_steps_cumulative"] > 0

    with tempfile.TemporaryDirectory() as d:
        path = Path(d) / "model.json"
        final.save(path)
        again = mbrl_py.DynamicsModel.load(path)
        assert again.predict([0.1] * 4, [0.5, -0.5]) == final.predict([0.1] * 4, [0.5, -0.5])
        mbrl_py.run_command("run-mpc", cfg, Path(d) / "mpc", model=str(path))
        assert (Path(d) / "mpc" / "episode.csv").exists()
        try:
            mbrl_py.run_command("run-mpc", cfg, Path(d) / "x", model=str(Path(d) / "missing.json"))
        except FileNotFoundError:
            pass
        else:
            raise AssertionError("missing model accepted")

    r = mbrl_py.path_reward(model, [0.0] * 4, [[0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]])
    assert math.isfinite(r)
    print("smoke test ok", mbrl_py.__version__)


if __name__ == "__main__":
    main()
