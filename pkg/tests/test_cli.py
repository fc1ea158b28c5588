import json

import pytest

from zipolicy import formats
from zipolicy.cli import _seed_list, main


@pytest.fixture(scope="module")
def small(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    path = d / "demos.zipd"
    assert main(["generate", "--dataset", str(path), "--demos", "15"]) == 0
    return path


def test_seed_list_syntax():
    assert _seed_list("1000-1003,7") == (1000, 1001, 1002, 1003, 7)
    assert _seed_list("5") == (5,)


def test_generate_is_byte_identical(small, tmp_path):
    again = tmp_path / "again.zipd"
    assert main(["generate", "--dataset", str(again), "--demos", "15"]) == 0
    assert again.read_bytes() == small.read_bytes()


def test_validate(small, tmp_path, capsys):
    assert main(["validate", "--dataset", str(small)]) == 0
    assert "ok: 15 trajectories" in capsys.readouterr().out
    bad = tmp_path / "bad.zipd"
    bad.write_bytes(b"NOPE" + small.read_bytes()[4:])
    assert main(["validate", "--dataset", str(bad)]) == 2
    assert "bad magic" in capsys.readouterr().err


def test_validate_reports_violations(tmp_path, capsys):
    from zipolicy.latent import Dataset, Trajectory
    path = tmp_path / "v.zipd"
    formats.write_dataset(path, Dataset(2, 2, [Trajectory(0, [[0, 0], [1, 1]], [0, 5])]))
    assert main(["validate", "--dataset", str(path)]) == 1
    assert "action out of alphabet" in capsys.readouterr().out


def test_run_writes_reproducible_report_and_log(small, tmp_path, capsys):
    args = ["run", "--dataset", str(small), "--seed-list", "1000-1002", "--runs", "2"]
    assert main(args + ["--report", str(tmp_path / "a.json"), "--log", str(tmp_path / "a.jsonl")]) == 0
    assert "success" in capsys.readouterr().out
    assert main(args + ["--report", str(tmp_path / "b.json")]) == 0
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    report = json.loads((tmp_path / "a.json").read_text())
    assert len(report["run_rates"]) == 2 and sorted(report["per_seed"]) == ["1000", "1001", "1002"]
    assert len(formats.read_episode_logs(tmp_path / "a.jsonl")) == 6


def test_run_replay_only_with_inf(small, tmp_path):
    assert main(["run", "--dataset", str(small), "--policy", "replay-only", "--seed-list", "0", "--runs", "1",
                 "--fixed-spawn", "--report", str(tmp_path / "r.json")]) == 0
    report = json.loads((tmp_path / "r.json").read_text())
    assert report["max_steps"] == "inf" and report["mean"] == 100.0


@pytest.mark.parametrize("argv, msg", [
    (["run", "--dataset", "missing.zipd"], "missing.zipd"),
    (["run", "--seed-list", ","], "seed list is empty"),
    (["run", "--seed-list", "3,3"], "duplicates"),
    (["run", "--divergence-factor", "-1"], "divergence"),
])
def test_errors_exit_with_2(argv, msg, capsys, small):
    if "--dataset" not in argv:
        argv = argv + ["--dataset", str(small)]
    assert main(argv) == 2
    assert msg in capsys.readouterr().err


def test_dimension_mismatch_rejected(small, tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text("[encoder]\ndimension = 16\n")
    assert main(["run", "--config", str(cfg), "--dataset", str(small)]) == 2
    assert "d=32" in capsys.readouterr().err


def test_export_embeddings(small, tmp_path):
    out = tmp_path / "e.csv"
    assert main(["export-embeddings", "--dataset", str(small), "--demos", "15", "--count", "10", "--out", str(out)]) == 0
    with open(out) as fh:
        labels, values = formats.import_embeddings(fh)
    assert {t for t, _, _ in labels} == set(range(10)) and values.shape[1] == 32


def test_export_refuses_mismatched_config(small, tmp_path, capsys):
    assert main(["export-embeddings", "--dataset", str(small), "--demos", "14", "--count", "3",
                 "--out", str(tmp_path / "e.csv")]) == 2
    assert "does not match" in capsys.readouterr().err


def test_ablate_small(small, tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text("[ablate]\nruns = 1\nepisodes = 1\nmax_steps_values = [8, 128]\ndivergence_factor_values = [2.0]\n")
    assert main(["ablate", "--config", str(cfg), "--dataset", str(small), "--report", str(tmp_path / "a.json")]) == 0
    report = json.loads((tmp_path / "a.json").read_text())
    assert [c["value"] for c in report["max_steps"]] == [8, 128]
    assert len(report["divergence_factor"]) == 1
