import io
import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import random_dataset
from zipolicy import formats
from zipolicy.baselines import RandomPolicy
from zipolicy.encoder import GridEncoder
from zipolicy.episode import run_episode
from zipolicy.gridworld import GridWorld
from zipolicy.latent import Dataset, Trajectory
from zipolicy.policy import ZipPolicy


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 12), st.integers(1, 20), st.integers(1, 9))
def test_round_trip_is_identity(seed, n_traj, max_len, d):
    ds = random_dataset(np.random.default_rng(seed), n_traj, max_len, d=d)
    ds = Dataset(ds.dimension, ds.action_alphabet_size, ds.trajectories, projection_seed=seed * 977)
    back = formats.dataset_from_bytes(formats.dataset_to_bytes(ds))
    assert back.equals(ds)
    assert formats.dataset_to_bytes(back) == formats.dataset_to_bytes(ds)


def test_special_values_survive(tmp_path):
    emb = np.array([[-0.0, 1e-45], [3.4e38, -1.5]], dtype=np.float32)
    ds = Dataset(2, 4, [Trajectory(0, emb, [3, 0])], projection_seed=2**64 - 1)
    formats.write_dataset(tmp_path / "x.zipd", ds)
    back = formats.read_dataset(tmp_path / "x.zipd")
    assert back.equals(ds)
    assert np.signbit(back.trajectories[0].embeddings[0, 0])
    assert back.projection_seed == 2**64 - 1


def test_header_layout():
    ds = Dataset(3, 4, [Trajectory(0, np.zeros((2, 3), np.float32), [1, 2])], projection_seed=5)
    raw = formats.dataset_to_bytes(ds)
    assert raw[:4] == b"ZIPD"
    assert struct.unpack_from("<IIIQI", raw, 4) == (1, 3, 4, 5, 1)
    assert len(raw) == 4 + 4 * 3 + 8 + 4 + 4 + 2 * (3 * 4 + 4)


@pytest.fixture
def raw():
    return formats.dataset_to_bytes(random_dataset(np.random.default_rng(3), 4, 6, d=5))


def test_bad_magic_rejected(raw):
    with pytest.raises(formats.FormatError, match="magic"):
        formats.dataset_from_bytes(b"ZIPX" + raw[4:])


def test_bad_version_rejected(raw):
    with pytest.raises(formats.FormatError, match="version"):
        formats.dataset_from_bytes(raw[:4] + struct.pack("<I", 2) + raw[8:])


@pytest.mark.parametrize("cut", [1, 10, 29, 33, 50])
def test_truncation_rejected(raw, cut):
    with pytest.raises(formats.FormatError, match="truncated"):
        formats.dataset_from_bytes(raw[: min(cut, len(raw) - 1)])


def test_trailing_bytes_rejected(raw):
    with pytest.raises(formats.FormatError, match="trailing"):
        formats.dataset_from_bytes(raw + b"\0")


def test_episode_log_round_trip(tmp_path, default_cfg, demo_index):
    logs = [
        run_episode(GridWorld(default_cfg.env), GridEncoder(default_cfg.encoder), ZipPolicy(demo_index), 1001, 40),
        run_episode(GridWorld(default_cfg.env), GridEncoder(default_cfg.encoder), RandomPolicy(4, 1), 1002, 15, 77),
    ]
    formats.write_episode_logs(tmp_path / "log.jsonl", logs)
    back = formats.read_episode_logs(tmp_path / "log.jsonl")
    assert back == logs
    lines = (tmp_path / "log.jsonl").read_text().splitlines()
    assert len(lines) == sum(1 + len(l.steps) + len(l.events) for l in logs)


def test_csv_export_of_ten_trajectories(generated):
    buf = io.StringIO()
    ds = generated.dataset
    rows = formats.export_embeddings(ds, 10, generated.in_goal, buf)
    buf.seek(0)
    labels, values = formats.import_embeddings(buf)
    assert rows == len(labels) == sum(len(t) for t in ds.trajectories[:10])
    assert {tid for tid, _, _ in labels} == set(range(10))
    assert np.array_equal(values, np.concatenate([t.embeddings for t in ds.trajectories[:10]]))
    assert [g for _, _, g in labels] == [f for flags in generated.in_goal[:10] for f in flags]
    assert any(g for _, _, g in labels)


def test_csv_export_count_checked(generated):
    with pytest.raises(ValueError):
        formats.export_embeddings(generated.dataset, 101, None, io.StringIO())
