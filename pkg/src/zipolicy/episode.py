"""Episode loop, episode logs and the consecutive-frames success criterion."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

from .index import FrameRef
from .policy import EventKind, SearchEvent


@dataclass(frozen=True)
class SuccessCriterion:
    required_consecutive: int = 5

    def __post_init__(self):
        if self.required_consecutive < 1:
            raise ValueError("required_consecutive must be >= 1")


class StepRecord(NamedTuple):
    step: int
    action: int
    frame: Optional[FrameRef]
    dist: Optional[float]
    reference_distance: Optional[float]
    event: Optional[EventKind]
    in_goal: bool


@dataclass
class EpisodeLog:
    policy: str = ""
    seed: int = 0
    spawn_seed: int = 0
    steps: list[StepRecord] = field(default_factory=list)
    events: list[SearchEvent] = field(default_factory=list)

    @property
    def in_goal_flags(self) -> list[bool]:
        return [s.in_goal for s in self.steps]

    @property
    def actions(self) -> list[int]:
        return [s.action for s in self.steps]

    def event_counts(self) -> dict[str, int]:
        counts = {k.value: 0 for k in EventKind}
        for e in self.events:
            counts[EventKind(e.kind).value] += 1
        return counts


class EpisodeError(RuntimeError):
    def __init__(self, step: int, cause: Exception):
        self.step = step
        super().__init__(f"environment fault at step {step}: {cause}")


def success_detector(flags_or_log, crit: SuccessCriterion | int = SuccessCriterion()) -> bool:
    """True iff some run of at least K consecutive steps is in the goal."""
    K = crit if isinstance(crit, int) else crit.required_consecutive
    flags = flags_or_log.in_goal_flags if isinstance(flags_or_log, EpisodeLog) else flags_or_log
    run = 0
    for flag in flags:
        run = run + 1 if flag else 0
        if run >= K:
            return True
    return False


def run_episode(env, encoder, policy, seed: int, max_episode_steps: int, spawn_seed: int | None = None) -> EpisodeLog:
    """Reset everything, then act for exactly ``max_episode_steps`` environment steps.

    The in-goal flag of step t belongs to the observation the policy acted on.
    There is no terminal action: the episode always runs to the step budget.
    """
    if max_episode_steps < 1:
        raise ValueError("max_episode_steps must be >= 1")
    log = EpisodeLog(policy=getattr(policy, "name", type(policy).__name__), seed=seed,
                     spawn_seed=seed if spawn_seed is None else spawn_seed)
    try:
        obs = env.reset(seed, spawn_seed)
    except Exception as exc:
        raise EpisodeError(0, exc) from exc
    encoder.reset_history()
    for t in range(max_episode_steps):
        emb = encoder.encode(obs)
        info = policy.begin(emb) if t == 0 else policy.act(emb)
        event = info.event
        if event is not None:
            log.events.append(event)
        log.steps.append(StepRecord(t, int(info.action), info.frame, info.dist, info.reference_distance,
                                    None if event is None else event.kind, obs.in_goal))
        try:
            obs = env.step(info.action)
        except Exception as exc:
            raise EpisodeError(t, exc) from exc
    return log
