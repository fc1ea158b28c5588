import json
import math

import pytest

from zipolicy.experiment import (
    AblationConfig, ConfigError, DataConfig, ExperimentConfig, RunConfig, ablation_base, config_from_dict,
    config_to_dict, dumps_report, generate_dataset, load_config, run_ablation, run_batch,
)


def test_example_config_is_the_default(tmp_path):
    assert load_config("configs/findgoal.toml") == ExperimentConfig()


def test_inf_and_overrides():
    cfg = config_from_dict({"run": {"max_steps": "inf", "seeds": [5, 6]}, "encoder": {"window_size": 5}})
    assert cfg.run.max_steps == math.inf and cfg.run.seeds == (5, 6)
    assert cfg.env.window_size == 5  # environment follows the encoder


@pytest.mark.parametrize("raw, msg", [
    ({"bogus": {}}, "section"),
    ({"run": {"max_step": 3}}, "max_step"),
    ({"run": {"seeds": []}}, "empty"),
    ({"run": {"seeds": [1, 1]}}, "duplicates"),
    ({"run": {"runs": 0}}, "runs"),
    ({"run": {"policy": "bc"}}, "policy"),
    ({"run": {"divergence_factor": 0}}, "divergence"),
    ({"data": {"demos": 0}}, "demos"),
])
def test_bad_configs_rejected(raw, msg):
    with pytest.raises(ConfigError, match=msg):
        config_from_dict(raw)


def test_malformed_toml(tmp_path):
    (tmp_path / "c.toml").write_text("[run\n")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "c.toml")


def test_config_dict_round_trip():
    cfg = config_from_dict({"run": {"policy": "replay-only", "max_steps": "inf"}})
    assert config_from_dict(json.loads(json.dumps(config_to_dict(cfg)))) == cfg


def test_generation_is_deterministic():
    cfg = ExperimentConfig(data=DataConfig(demos=12))
    a, b = generate_dataset(cfg), generate_dataset(cfg)
    assert a.dataset.equals(b.dataset) and a.map_seeds == b.map_seeds and a.spawn_seeds == b.spawn_seeds


def test_distinct_starts(generated):
    starts = [t.embeddings[0].tobytes() for t in generated.dataset.trajectories]
    assert len(set(starts)) == len(starts)
    assert generated.map_seeds == sorted(set(generated.map_seeds))
    assert max(generated.map_seeds) < 1000  # never touches the held-out maps


def test_single_run_single_seed_has_zero_std(default_cfg, demo_index):
    rep, _ = run_batch(default_cfg.with_run(seeds=(1000,), runs=1), demo_index)
    assert rep.std == 0.0 and rep.run_rates[0] in (0.0, 100.0)


def test_report_is_reproducible(default_cfg, demo_index):
    cfg = default_cfg.with_run(seeds=(1000, 1001, 1002), runs=2)
    a, logs = run_batch(cfg, demo_index, keep_logs=True)
    b, _ = run_batch(cfg, demo_index)
    assert dumps_report(a.to_dict()) == dumps_report(b.to_dict())
    assert len(logs) == 6
    assert sum(a.event_counts.values()) == sum(len(l.events) for l in logs)
    assert "seconds" not in dumps_report(a.to_dict())


def test_runs_see_different_spawns(default_cfg, demo_index):
    _, logs = run_batch(default_cfg.with_run(seeds=(1000,), runs=3), demo_index, keep_logs=True)
    assert len({l.spawn_seed for l in logs}) == 3
    _, logs = run_batch(default_cfg.with_run(seeds=(1000,), runs=3, vary_spawn=False), demo_index, keep_logs=True)
    assert {l.spawn_seed for l in logs} == {1000}


def test_replay_only_on_training_spawn(default_cfg, generated, demo_index):
    map_seed = next(m for m, s in zip(generated.map_seeds, generated.spawn_seeds) if m == s)
    cfg = default_cfg.with_run(policy="replay-only", seeds=(map_seed,), runs=1, vary_spawn=False)
    rep, _ = run_batch(cfg, demo_index)
    assert rep.run_rates == [100.0]


def test_small_ablation_grid(default_cfg, demo_index):
    cfg = ExperimentConfig(ablate=AblationConfig(runs=2, episodes=2, max_steps_values=(16, 128),
                                                 divergence_factor_values=(1.0, 2.0, 3.0)))
    rep = run_ablation(cfg, demo_index)
    assert [r.max_steps for r in rep.max_steps] == [16, 128]
    assert [r.divergence_factor for r in rep.divergence_factor] == [1.0, 2.0, 3.0]
    assert all(r.divergence_factor == 2.0 for r in rep.max_steps)
    assert all(r.max_steps == 128 for r in rep.divergence_factor)
    assert dumps_report(rep.to_dict()) == dumps_report(run_ablation(cfg, demo_index).to_dict())
    # the reference cell is an ordinary run with the ablation's seed and episode count
    alone, _ = run_batch(cfg.with_run(seeds=(1000,), runs=2, episodes_per_seed=2), demo_index)
    assert rep.max_steps[1].to_dict() == alone.to_dict() == rep.divergence_factor[1].to_dict()
    assert len(rep.table().splitlines()) == 1 + 2 + 3


def test_ablation_base_ignores_baseline_policy():
    cfg = ExperimentConfig(run=RunConfig(policy="random"))
    assert ablation_base(cfg).run.policy == "zip"
