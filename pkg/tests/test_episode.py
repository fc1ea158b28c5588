import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import has_run
from zipolicy.baselines import KnnStepPolicy, RandomPolicy
from zipolicy.encoder import GridEncoder
from zipolicy.episode import EpisodeError, SuccessCriterion, run_episode, success_detector
from zipolicy.gridworld import GridWorld
from zipolicy.policy import EventKind, PolicyConfig, ZipPolicy

T, F = True, False


def test_detector_examples():
    assert success_detector([F, T, T, T, F], SuccessCriterion(3))
    assert not success_detector([T, T, F, T, T], SuccessCriterion(3))
    assert not success_detector([], SuccessCriterion(1))


@given(st.lists(st.booleans(), max_size=60), st.integers(1, 8))
def test_detector_matches_run_length_oracle(flags, k):
    assert success_detector(flags, SuccessCriterion(k)) == has_run(flags, k)


def test_criterion_invariant():
    with pytest.raises(ValueError):
        SuccessCriterion(0)


def zip_episode(cfg, index, seed, steps=200, spawn=None, policy_cfg=PolicyConfig()):
    return run_episode(GridWorld(cfg.env), GridEncoder(cfg.encoder), ZipPolicy(index, policy_cfg), seed, steps, spawn)


def test_single_step_episode(default_cfg, demo_index):
    log = zip_episode(default_cfg, demo_index, 1000, steps=1)
    assert len(log.steps) == 1 and len(log.events) == 1
    assert log.events[0].kind is EventKind.INITIAL and log.steps[0].event is EventKind.INITIAL


def test_budget_must_be_positive(default_cfg, demo_index):
    with pytest.raises(ValueError):
        zip_episode(default_cfg, demo_index, 1000, steps=0)


def test_episode_is_deterministic(default_cfg, demo_index):
    a = zip_episode(default_cfg, demo_index, 1003, spawn=42)
    b = zip_episode(default_cfg, demo_index, 1003, spawn=42)
    assert a == b
    assert len(a.steps) == 200 and a.spawn_seed == 42


def test_log_agrees_with_events(default_cfg, demo_index):
    log = zip_episode(default_cfg, demo_index, 1005)
    flagged = [(s.step, s.event) for s in log.steps if s.event is not None]
    assert flagged == [(e.step, e.kind) for e in log.events]
    assert sum(log.event_counts().values()) == len(log.events)
    for s in log.steps:
        assert s.action == demo_index.action_at(s.frame)


def test_replay_on_training_map_succeeds(default_cfg, generated, demo_index):
    # replay-only from the spawn the expert used retraces the demonstration
    replay = PolicyConfig(float("inf"), float("inf"))
    for tid in range(10):
        log = zip_episode(default_cfg, demo_index, generated.map_seeds[tid], spawn=generated.spawn_seeds[tid],
                          policy_cfg=replay)
        traj = generated.dataset.trajectories[tid]
        assert log.actions[: len(traj) - 1] == list(traj.actions[:-1])
        assert success_detector(log, SuccessCriterion(5))


def test_knn_step_copies_nearest_action(default_cfg, demo_index):
    log = run_episode(GridWorld(default_cfg.env), GridEncoder(default_cfg.encoder), KnnStepPolicy(demo_index), 1002, 60)
    env, enc = GridWorld(default_cfg.env), GridEncoder(default_cfg.encoder)
    obs = env.reset(1002)
    for s in log.steps:
        hit = demo_index.nearest(enc.encode(obs))
        assert (s.frame, s.dist) == (hit.frame, hit.distance)
        assert s.action == demo_index.action_at(hit.frame)
        obs = env.step(s.action)
    assert log.events == []


def test_random_policy_is_reproducible(default_cfg):
    def actions(seed):
        return run_episode(GridWorld(default_cfg.env), GridEncoder(default_cfg.encoder), RandomPolicy(4, seed), 1000, 50).actions
    assert actions(5) == actions(5)
    assert actions(5) != actions(6)
    assert set(actions(5)) <= {0, 1, 2, 3}


def test_random_policy_restarts_per_episode():
    p = RandomPolicy(4, 9)
    first = [p.begin(None).action] + [p.act(None).action for _ in range(20)]
    again = [p.begin(None).action] + [p.act(None).action for _ in range(20)]
    assert first == again


class BrokenEnv(GridWorld):
    def step(self, action):
        if self.tick == 3:
            raise RuntimeError("simulator crashed")
        return super().step(action)


def test_environment_fault_reports_step(default_cfg, demo_index):
    with pytest.raises(EpisodeError) as err:
        run_episode(BrokenEnv(default_cfg.env), GridEncoder(default_cfg.encoder), ZipPolicy(demo_index), 1000, 10)
    assert err.value.step == 3
