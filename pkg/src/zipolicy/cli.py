"""Command-line driver: ``zipolicy {generate,run,ablate,export-embeddings,validate}``."""

from __future__ import annotations

import argparse
import logging
import math
import re
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import formats
from .experiment import (
    POLICY_KINDS,
    ConfigError,
    ExperimentConfig,
    check_dataset_matches,
    dumps_report,
    generate_dataset,
    load_config,
    run_ablation,
    run_batch,
)
from .index import InvalidDataset, build_index
from .latent import validate_dataset

log = logging.getLogger("zipolicy")


def _number(text: str) -> float:
    value = float(text)
    return value if math.isinf(value) or not value.is_integer() else int(value)


def _seed_list(text: str) -> tuple[int, ...]:
    """Comma-separated seeds; ``a-b`` expands to the inclusive range."""
    seeds: list[int] = []
    for part in filter(None, (p.strip() for p in text.split(","))):
        m = re.fullmatch(r"(\d+)-(\d+)", part)
        if m:
            seeds.extend(range(int(m[1]), int(m[2]) + 1))
        else:
            seeds.append(int(part))
    return tuple(seeds)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zipolicy", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=Path, help="TOML run configuration")
        p.add_argument("--dataset", help="dataset file (overrides [data] path)")

    def run_flags(p):
        p.add_argument("--policy", choices=POLICY_KINDS)
        p.add_argument("--seed-list", type=_seed_list, help="e.g. 1000-1019 or 3,5,8")
        p.add_argument("--runs", type=int)
        p.add_argument("--episodes-per-seed", type=int)
        p.add_argument("--max-steps", type=_number, help="steps on one reference before a time search (inf allowed)")
        p.add_argument("--divergence-factor", type=float)
        p.add_argument("--epsilon", type=float)
        p.add_argument("--max-episode-steps", type=int)
        p.add_argument("--required-consecutive", type=int)
        p.add_argument("--fixed-spawn", action="store_true", help="spawn where the map seed puts it on every run")
        p.add_argument("--index", choices=("partitioned", "linear"))
        p.add_argument("--report", type=Path, help="write the JSON report here")

    def data_flags(p):
        p.add_argument("--demos", type=int)
        p.add_argument("--first-seed", type=int)
        p.add_argument("--detour-probability", type=float)

    p = sub.add_parser("generate", help="script expert demos, encode them and write a dataset file")
    common(p)
    data_flags(p)

    p = sub.add_parser("run", help="evaluate a policy over a seed batch")
    common(p)
    run_flags(p)
    p.add_argument("--log", type=Path, help="write every episode log (JSON lines) here")

    p = sub.add_parser("ablate", help="sweep max_steps and divergence factor")
    common(p)
    run_flags(p)
    p.add_argument("--ablation-seed", type=int)

    p = sub.add_parser("export-embeddings", help="labelled CSV of embeddings for external projection")
    common(p)
    data_flags(p)  # the demos are regenerated to recover goal flags
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("validate", help="check a dataset file")
    common(p)
    return parser


def resolve_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    data = cfg.data
    if args.dataset:
        data = replace(data, path=args.dataset)
    for flag, key in (("demos", "demos"), ("first_seed", "first_seed"), ("detour_probability", "detour_probability")):
        value = getattr(args, flag, None)
        if value is not None:
            data = replace(data, **{key: value})
    run_changes = {}
    for flag, key in (
        ("policy", "policy"), ("seed_list", "seeds"), ("runs", "runs"), ("episodes_per_seed", "episodes_per_seed"),
        ("max_steps", "max_steps"), ("divergence_factor", "divergence_factor"), ("epsilon", "epsilon"),
        ("max_episode_steps", "max_episode_steps"), ("required_consecutive", "required_consecutive"),
        ("index", "index"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            run_changes[key] = value
    if getattr(args, "fixed_spawn", False):
        run_changes["vary_spawn"] = False
    try:
        cfg = replace(cfg, data=data, run=replace(cfg.run, **run_changes))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if getattr(args, "ablation_seed", None) is not None:
        cfg = replace(cfg, ablate=replace(cfg.ablate, seed=args.ablation_seed))
    return cfg


def _load_index(cfg: ExperimentConfig):
    ds = formats.read_dataset(cfg.data.path)
    check_dataset_matches(ds, cfg)
    t0 = time.perf_counter()
    index = build_index(ds, cfg.run.index)
    log.info("index of %d frames built in %.3f s", len(index), time.perf_counter() - t0)
    return ds, index, time.perf_counter() - t0


def cmd_generate(cfg: ExperimentConfig) -> int:
    gen = generate_dataset(cfg)
    formats.write_dataset(cfg.data.path, gen.dataset)
    print(f"wrote {cfg.data.path}: {len(gen.dataset)} trajectories, {gen.dataset.frame_count} frames, d={gen.dataset.dimension}")
    print(f"encode {gen.encode_seconds:.3f} s, index {gen.index_seconds:.3f} s")
    return 0


def cmd_run(cfg: ExperimentConfig, log_path: Path | None, report_path: Path | None) -> int:
    _, index, index_seconds = _load_index(cfg)
    report, logs = run_batch(cfg, index, keep_logs=log_path is not None)
    report.index_seconds = index_seconds
    run = cfg.run
    print(f"policy {run.policy}  max_steps={report.max_steps}  divergence_factor={report.divergence_factor}")
    for r, rate in enumerate(report.run_rates):
        print(f"  run {r}: {rate:.2f}%")
    print(f"success {report.summary()}  ({len(run.seeds)} seeds x {run.episodes_per_seed} episodes x {run.runs} runs)")
    print("search events " + ", ".join(f"{k}={v}" for k, v in report.event_counts.items()))
    if report_path:
        report_path.write_text(dumps_report(report.to_dict()))
    if log_path:
        formats.write_episode_logs(log_path, logs)
    return 0


def cmd_ablate(cfg: ExperimentConfig, report_path: Path | None) -> int:
    _, index, _ = _load_index(cfg)
    report = run_ablation(cfg, index, progress=log.info)
    print(report.table())
    if report_path:
        report_path.write_text(dumps_report(report.to_dict()))
    return 0


def cmd_export(cfg: ExperimentConfig, count: int, out: Path) -> int:
    ds = formats.read_dataset(cfg.data.path)
    if count > len(ds):
        raise ConfigError(f"--count {count} exceeds the {len(ds)} trajectories in {cfg.data.path}")
    # goal flags are not stored in the dataset; regenerate the demos and make
    # sure they are the ones the file was built from
    regenerated = generate_dataset(cfg)
    if not regenerated.dataset.equals(ds):
        raise ConfigError("dataset file does not match the demos described by the config; cannot label goal frames")
    with open(out, "w", newline="") as fh:
        rows = formats.export_embeddings(ds, count, regenerated.in_goal, fh)
    print(f"wrote {rows} rows for {count} trajectories to {out}")
    return 0


def cmd_validate(cfg: ExperimentConfig) -> int:
    ds = formats.read_dataset(cfg.data.path)
    violations = validate_dataset(ds)
    for v in violations:
        print(f"trajectory {v.trajectory_id} offset {v.offset}: {v.reason}")
    if violations:
        return 1
    print(f"ok: {len(ds)} trajectories, {ds.frame_count} frames, d={ds.dimension}, A={ds.action_alphabet_size}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = resolve_config(args)
        if args.command == "generate":
            return cmd_generate(cfg)
        if args.command == "run":
            return cmd_run(cfg, args.log, args.report)
        if args.command == "ablate":
            return cmd_ablate(cfg, args.report)
        if args.command == "export-embeddings":
            return cmd_export(cfg, args.count, args.out)
        return cmd_validate(cfg)
    except (ConfigError, formats.FormatError, InvalidDataset, OSError, ValueError) as exc:
        print(f"zipolicy: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
