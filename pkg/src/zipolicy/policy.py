"""Search-and-copy control loop.

The policy keeps a cursor into one reference demonstration and replays its
actions.  Each step the cursor advances one frame and the distance between
the current embedding and the reference frame is compared with the distance
recorded at the last search.  A new search is made when

* the cursor reaches the last frame of its trajectory (TrajectoryEnd),
* the distance exceeds ``divergence_scaling_factor`` times the baseline
  (Divergence), or
* the same reference has been followed for ``max_steps`` steps (Time).

Time-triggered searches exclude the frame the cursor currently sits on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Optional

from .index import FrameRef, LinearIndex
from .latent import l1_distance


class EventKind(str, Enum):
    INITIAL = "Initial"
    DIVERGENCE = "Divergence"
    TIME = "Time"
    TRAJECTORY_END = "TrajectoryEnd"


@dataclass(frozen=True)
class PolicyConfig:
    max_steps: float = 128
    divergence_scaling_factor: float = 2.0
    zero_distance_epsilon: float = 1e-6

    def __post_init__(self):
        n = self.max_steps
        if not (n == math.inf or (float(n).is_integer() and n >= 1)):
            raise ValueError(f"max_steps must be a positive integer or inf, got {n}")
        if not self.divergence_scaling_factor > 0:
            raise ValueError(f"divergence_scaling_factor must be > 0, got {self.divergence_scaling_factor}")
        if not self.zero_distance_epsilon > 0:
            raise ValueError(f"zero_distance_epsilon must be > 0, got {self.zero_distance_epsilon}")
        if n != math.inf:
            object.__setattr__(self, "max_steps", int(n))


PRESETS = {
    "default": PolicyConfig(max_steps=128, divergence_scaling_factor=2.0),
    "ablation-best": PolicyConfig(max_steps=32, divergence_scaling_factor=1.0),
    "replay-only": PolicyConfig(max_steps=math.inf, divergence_scaling_factor=math.inf),
}


class SearchEvent(NamedTuple):
    kind: EventKind
    step: int
    old_frame: Optional[FrameRef]
    new_frame: FrameRef
    distance_at_trigger: float


@dataclass
class SituationCursor:
    frame: FrameRef
    reference_distance: float
    steps_since_search: int = 0


class StepInfo(NamedTuple):
    """What a policy did on one step; shared by every policy in the harness."""

    action: int
    frame: Optional[FrameRef] = None
    dist: Optional[float] = None
    reference_distance: Optional[float] = None
    event: Optional[SearchEvent] = None


class PolicyNotStarted(RuntimeError):
    pass


class ZipPolicy:
    """Zero-shot imitation by nearest-situation search and action copying."""

    name = "zip"

    def __init__(self, index: LinearIndex, cfg: PolicyConfig | None = None):
        self.index = index
        self.cfg = cfg or PolicyConfig()
        self.cursor: SituationCursor | None = None
        self.step_count = 0

    def begin(self, first_embedding) -> StepInfo:
        result = self.index.nearest(first_embedding)
        self.cursor = SituationCursor(result.frame, result.distance, 0)
        self.step_count = 0
        event = SearchEvent(EventKind.INITIAL, 0, None, result.frame, result.distance)
        return StepInfo(self.index.action_at(result.frame), result.frame, result.distance, result.distance, event)

    def act(self, embedding) -> StepInfo:
        cur = self.cursor
        if cur is None:
            raise PolicyNotStarted("policy stepped before begin()")
        self.step_count += 1
        frame = FrameRef(cur.frame.trajectory_id, cur.frame.offset + 1)
        cur.frame = frame
        cur.steps_since_search += 1
        dist = l1_distance(embedding, self.index.embedding_at(frame))

        cfg = self.cfg
        kind = None
        if frame.offset == self.index.trajectory_length(frame.trajectory_id) - 1:
            kind = EventKind.TRAJECTORY_END
        elif dist > cfg.divergence_scaling_factor * max(cur.reference_distance, cfg.zero_distance_epsilon):
            kind = EventKind.DIVERGENCE
        elif cur.steps_since_search >= cfg.max_steps:
            kind = EventKind.TIME

        event = None
        if kind is not None:
            if kind is EventKind.TIME:
                result = self.index.nearest_excluding(embedding, frame)
            else:
                result = self.index.nearest(embedding)
            event = SearchEvent(kind, self.step_count, frame, result.frame, dist)
            cur.frame = result.frame
            cur.reference_distance = result.distance
            cur.steps_since_search = 0
        return StepInfo(self.index.action_at(cur.frame), cur.frame, dist, cur.reference_distance, event)


def policy_init(index: LinearIndex, cfg: PolicyConfig, first_embedding):
    """Functional entry point: returns (policy state, action, Initial event)."""
    policy = ZipPolicy(index, cfg)
    info = policy.begin(first_embedding)
    return policy, info.action, info.event


def policy_step(policy: ZipPolicy, current_embedding):
    """Functional entry point: returns (action, event or None)."""
    info = policy.act(current_embedding)
    return info.action, info.event
