"""Dataset generation, batch evaluation and ablation sweeps."""

from __future__ import annotations

import json
import math
import statistics
import sys
import time
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .baselines import KnnStepPolicy, RandomPolicy
from .encoder import EncoderConfig, GridEncoder, projection_matrix
from .episode import EpisodeLog, SuccessCriterion, run_episode, success_detector
from .gridworld import N_ACTIONS, GridConfig, GridWorld, generate_expert_demo
from .index import build_index
from .latent import Dataset, Trajectory
from .policy import PRESETS, EventKind, PolicyConfig, ZipPolicy
from .rng import mix

POLICY_KINDS = ("zip", "knn-step", "random", "replay-only")
DEFAULT_TEST_SEEDS = tuple(range(1000, 1020))
MAX_STEPS_LADDER = (8, 16, 32, 64, 128, 256, 512, 1024, 2048)
DIVERGENCE_LADDER = (0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DataConfig:
    path: str = "findgoal.zipd"
    demos: int = 100
    first_seed: int = 0
    detour_probability: float = 0.2
    extra_dwell: int = 3
    distinct_starts: bool = True
    max_spawn_attempts: int = 64

    def __post_init__(self):
        if self.demos < 1:
            raise ConfigError("data.demos must be >= 1")
        if not 0.0 <= self.detour_probability < 1.0:
            raise ConfigError("data.detour_probability must lie in [0, 1)")
        if self.extra_dwell < 0 or self.max_spawn_attempts < 1:
            raise ConfigError("data.extra_dwell must be >= 0 and data.max_spawn_attempts >= 1")


@dataclass(frozen=True)
class RunConfig:
    policy: str = "zip"
    max_steps: float = 128
    divergence_factor: float = 2.0
    epsilon: float = 1e-6
    seeds: tuple[int, ...] = DEFAULT_TEST_SEEDS
    runs: int = 3
    episodes_per_seed: int = 1
    max_episode_steps: int = 200
    required_consecutive: int = 5
    vary_spawn: bool = True
    index: str = "partitioned"

    def __post_init__(self):
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if self.policy not in POLICY_KINDS:
            raise ConfigError(f"policy must be one of {POLICY_KINDS}, got {self.policy!r}")
        if not self.seeds:
            raise ConfigError("seed list is empty")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seed list contains duplicates")
        if self.runs < 1 or self.episodes_per_seed < 1 or self.max_episode_steps < 1:
            raise ConfigError("runs, episodes_per_seed and max_episode_steps must be >= 1")
        self.policy_config()
        SuccessCriterion(self.required_consecutive)

    def policy_config(self) -> PolicyConfig:
        if self.policy == "replay-only":
            return replace(PRESETS["replay-only"], zero_distance_epsilon=self.epsilon)
        try:
            return PolicyConfig(self.max_steps, self.divergence_factor, self.epsilon)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def criterion(self) -> SuccessCriterion:
        return SuccessCriterion(self.required_consecutive)


@dataclass(frozen=True)
class AblationConfig:
    seed: int = 1000
    runs: int = 3
    episodes: int = 10
    max_steps_values: tuple[int, ...] = MAX_STEPS_LADDER
    divergence_factor_values: tuple[float, ...] = DIVERGENCE_LADDER


@dataclass(frozen=True)
class ExperimentConfig:
    data: DataConfig = field(default_factory=DataConfig)
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    env: GridConfig = field(default_factory=GridConfig)
    run: RunConfig = field(default_factory=RunConfig)
    ablate: AblationConfig = field(default_factory=AblationConfig)

    def __post_init__(self):
        if self.env.window_size != self.encoder.window_size:
            object.__setattr__(self, "env", replace(self.env, window_size=self.encoder.window_size))

    def with_run(self, **changes) -> "ExperimentConfig":
        return replace(self, run=replace(self.run, **changes))


_SECTIONS = {"data": DataConfig, "encoder": EncoderConfig, "env": GridConfig, "run": RunConfig, "ablate": AblationConfig}


def _coerce(value):
    if isinstance(value, str) and value.lower() in ("inf", "infinity"):
        return math.inf
    if isinstance(value, list):
        return tuple(_coerce(v) for v in value)
    return value


def config_from_dict(raw: dict[str, Any]) -> ExperimentConfig:
    parts = {}
    for name, value in raw.items():
        if name not in _SECTIONS:
            raise ConfigError(f"unknown config section [{name}]")
        cls = _SECTIONS[name]
        allowed = {f.name for f in fields(cls)}
        unknown = set(value) - allowed
        if unknown:
            raise ConfigError(f"unknown key(s) in [{name}]: {', '.join(sorted(unknown))}")
        try:
            parts[name] = cls(**{k: _coerce(v) for k, v in value.items()})
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[{name}]: {exc}") from None
    return ExperimentConfig(**parts)


def load_config(path) -> ExperimentConfig:
    with open(path, "rb") as fh:
        try:
            raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    return config_from_dict(raw)


# ------------------------------------------------------------------ datasets


@dataclass
class GeneratedDataset:
    dataset: Dataset
    in_goal: list[list[bool]]
    map_seeds: list[int]
    spawn_seeds: list[int]
    encode_seconds: float
    index_seconds: float


def encode_demo(demo, encoder: GridEncoder) -> np.ndarray:
    encoder.reset_history()
    return np.stack([encoder.encode(o) for o in demo.observations])


def demo_spawn_seed(seed: int, attempt: int) -> int:
    return seed if attempt == 0 else mix(seed, attempt, 0x5354415254)


def generate_dataset(cfg: ExperimentConfig) -> GeneratedDataset:
    """Script ``cfg.data.demos`` expert demos, encode every frame and time it.

    Map seeds are consumed in order from ``first_seed``.  With
    ``distinct_starts`` a demo whose first embedding already occurs among the
    earlier demos gets its spawn redrawn on the same map, and a map offering
    no fresh start is skipped; otherwise the tie-break would always hand that
    start to the earlier copy.
    """
    t0 = time.perf_counter()
    data = cfg.data
    env = GridWorld(cfg.env)
    encoder = GridEncoder(cfg.encoder)
    attempts = data.max_spawn_attempts if data.distinct_starts else 1
    seen: set[bytes] = set()
    trajectories, flags, maps, spawns = [], [], [], []
    seed = data.first_seed
    while len(trajectories) < data.demos:
        if seed - data.first_seed >= 10 * data.demos:
            raise ConfigError(f"could not find {data.demos} maps with distinct start situations")
        for attempt in range(attempts):
            demo = generate_expert_demo(seed, data.detour_probability, env, cfg.run.required_consecutive,
                                        data.extra_dwell, demo_spawn_seed(seed, attempt))
            emb = encode_demo(demo, encoder)
            if not data.distinct_starts or emb[0].tobytes() not in seen:
                seen.update(row.tobytes() for row in emb[:-1])  # last frames are never search results
                trajectories.append(Trajectory(len(trajectories), emb, demo.actions))
                flags.append(demo.in_goal_flags)
                maps.append(seed)
                spawns.append(demo.spawn_seed)
                break
        seed += 1
    ds = Dataset(cfg.encoder.dimension, N_ACTIONS, trajectories, cfg.encoder.projection_seed)
    t1 = time.perf_counter()
    build_index(ds, cfg.run.index)
    t2 = time.perf_counter()
    return GeneratedDataset(ds, flags, maps, spawns, t1 - t0, t2 - t1)


def check_dataset_matches(ds: Dataset, cfg: ExperimentConfig) -> None:
    if ds.dimension != cfg.encoder.dimension or ds.projection_seed != cfg.encoder.projection_seed:
        raise ConfigError(
            f"dataset was encoded with d={ds.dimension}, seed={ds.projection_seed:#x}; "
            f"config has d={cfg.encoder.dimension}, seed={cfg.encoder.projection_seed:#x}"
        )
    if ds.action_alphabet_size != N_ACTIONS:
        raise ConfigError(f"dataset action alphabet {ds.action_alphabet_size} != environment's {N_ACTIONS}")


# ------------------------------------------------------------------- reports


def population_std(values) -> float:
    return statistics.pstdev(values) if len(values) > 1 else 0.0


@dataclass
class SuccessReport:
    policy: str
    max_steps: float
    divergence_factor: float
    run_rates: list[float]
    per_seed: dict[int, list[list[bool]]]
    event_counts: dict[str, int]
    encode_seconds: float = 0.0
    index_seconds: float = 0.0

    @property
    def mean(self) -> float:
        return statistics.fmean(self.run_rates)

    @property
    def std(self) -> float:
        return population_std(self.run_rates)

    def summary(self) -> str:
        return f"{self.mean:.2f} ± {self.std:.2f}%"

    def to_dict(self) -> dict:
        """Serializable form; wall-clock timings are left out so reports are reproducible."""
        return {
            "policy": self.policy,
            "max_steps": _json_num(self.max_steps),
            "divergence_factor": _json_num(self.divergence_factor),
            "run_rates": self.run_rates,
            "mean": self.mean,
            "std": self.std,
            # one string per run, one character per episode: 1 success, 0 failure
            "per_seed": {str(s): ["".join("01"[ok] for ok in eps) for eps in runs]
                         for s, runs in sorted(self.per_seed.items())},
            "event_counts": self.event_counts,
        }


def _json_num(x):
    return "inf" if x == math.inf else x


def make_policy(run: RunConfig, index, episode_seed: int):
    if run.policy in ("zip", "replay-only"):
        return ZipPolicy(index, run.policy_config())
    if run.policy == "knn-step":
        return KnnStepPolicy(index)
    return RandomPolicy(N_ACTIONS, mix(episode_seed, 0x524E44))


def spawn_seed_for(run: RunConfig, seed: int, run_index: int, episode: int) -> int:
    return mix(seed, run_index, episode) if run.vary_spawn else seed


def run_batch(cfg: ExperimentConfig, index, keep_logs: bool = False) -> tuple[SuccessReport, list[EpisodeLog]]:
    """Every (run, seed, episode) combination, aggregated into a report."""
    run = cfg.run
    env = GridWorld(cfg.env)
    encoder = GridEncoder(cfg.encoder, projection_matrix(cfg.encoder))
    per_seed = {s: [[] for _ in range(run.runs)] for s in run.seeds}
    counts = {k.value: 0 for k in EventKind}
    rates, logs = [], []
    for r in range(run.runs):
        wins = 0
        for s in run.seeds:
            for e in range(run.episodes_per_seed):
                spawn = spawn_seed_for(run, s, r, e)
                policy = make_policy(run, index, spawn)
                log = run_episode(env, encoder, policy, s, run.max_episode_steps, spawn)
                ok = success_detector(log, run.criterion)
                wins += ok
                per_seed[s][r].append(ok)
                for k, v in log.event_counts().items():
                    counts[k] += v
                if keep_logs:
                    logs.append(log)
        rates.append(100.0 * wins / (len(run.seeds) * run.episodes_per_seed))
    pc = run.policy_config()
    report = SuccessReport(run.policy, pc.max_steps, pc.divergence_scaling_factor, rates, per_seed, counts)
    return report, logs


# ------------------------------------------------------------------ ablation


@dataclass
class AblationReport:
    max_steps: list[SuccessReport]
    divergence_factor: list[SuccessReport]

    def to_dict(self) -> dict:
        def cell(rep, param):
            return {"value": _json_num(getattr(rep, param)), "run_rates": rep.run_rates, "mean": rep.mean, "std": rep.std}

        return {
            "max_steps": [cell(r, "max_steps") for r in self.max_steps],
            "divergence_factor": [cell(r, "divergence_factor") for r in self.divergence_factor],
        }

    def table(self) -> str:
        lines = ["sweep              value   success"]
        for rep in self.max_steps:
            lines.append(f"max_steps      {rep.max_steps:>9}   {rep.summary()}")
        for rep in self.divergence_factor:
            lines.append(f"divergence     {rep.divergence_factor:>9}   {rep.summary()}")
        return "\n".join(lines)


def ablation_base(cfg: ExperimentConfig) -> ExperimentConfig:
    """The run settings of every ablation cell before the swept value is applied."""
    a = cfg.ablate
    return cfg.with_run(policy="zip", seeds=(a.seed,), runs=a.runs, episodes_per_seed=a.episodes)


def run_ablation(cfg: ExperimentConfig, index, progress=None) -> AblationReport:
    """Two one-dimensional sweeps around the base config, one parameter at a time."""
    base = ablation_base(cfg)
    sweeps = {"max_steps": [], "divergence_factor": []}
    for value in cfg.ablate.max_steps_values:
        rep, _ = run_batch(base.with_run(max_steps=value), index)
        sweeps["max_steps"].append(rep)
        if progress:
            progress(f"max_steps={value}: {rep.summary()}")
    for value in cfg.ablate.divergence_factor_values:
        rep, _ = run_batch(base.with_run(divergence_factor=value), index)
        sweeps["divergence_factor"].append(rep)
        if progress:
            progress(f"divergence_factor={value}: {rep.summary()}")
    return AblationReport(**sweeps)


def dumps_report(obj: dict) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def config_to_dict(cfg: ExperimentConfig) -> dict:
    return {name: {k: _json_num(v) for k, v in asdict(getattr(cfg, name)).items()} for name in _SECTIONS}
