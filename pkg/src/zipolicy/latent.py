"""Core demonstration types and the latent-space metric."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np


class DimensionMismatch(ValueError):
    """Two embeddings (or an embedding and a dataset) disagree on dimension."""


def row_l1(rows: np.ndarray, query: np.ndarray) -> np.ndarray:
    """L1 distance from ``query`` to every row of ``rows``, accumulated in float64.

    Every distance in the package goes through this kernel so that the same
    frame/query pair always yields the same bits, whichever code path asks.
    """
    rows = np.ascontiguousarray(rows, dtype=np.float64)
    query = np.asarray(query, dtype=np.float64)
    if rows.ndim != 2 or query.ndim != 1 or rows.shape[1] != query.shape[0]:
        raise DimensionMismatch(
            f"cannot compare query of shape {query.shape} with rows of shape {rows.shape}"
        )
    return np.abs(rows - query).sum(axis=1)


def l1_distance(a, b) -> float:
    """Sum of absolute coordinate differences between two embeddings."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 1 or a.shape != b.shape:
        raise DimensionMismatch(
            f"embedding dimensions differ: {a.shape} vs {b.shape}; "
            "dataset is corrupt or the encoder is misconfigured"
        )
    return float(row_l1(a[None, :], b)[0])


class Frame(NamedTuple):
    embedding: np.ndarray
    action: int


@dataclass(frozen=True, eq=False)
class Trajectory:
    """One expert demonstration: ``T`` embeddings and the action taken at each."""

    id: int
    embeddings: np.ndarray  # (T, d) float32
    actions: np.ndarray  # (T,) int64

    def __post_init__(self):
        emb = np.asarray(self.embeddings, dtype=np.float32)
        if emb.ndim == 1:
            emb = emb[None, :]
        act = np.asarray(self.actions, dtype=np.int64).reshape(-1)
        emb.setflags(write=False)
        act.setflags(write=False)
        object.__setattr__(self, "embeddings", emb)
        object.__setattr__(self, "actions", act)

    def __len__(self) -> int:
        return len(self.actions)

    def frame(self, offset: int) -> Frame:
        return Frame(self.embeddings[offset], int(self.actions[offset]))

    @property
    def frames(self) -> list[Frame]:
        return [self.frame(i) for i in range(len(self))]


@dataclass(frozen=True, eq=False)
class Dataset:
    """The searchable subset of demonstrations.

    ``projection_seed`` identifies the encoder that produced the embeddings and
    is carried through the file header.
    """

    dimension: int
    action_alphabet_size: int
    trajectories: list[Trajectory] = field(default_factory=list)
    projection_seed: int = 0

    def __len__(self) -> int:
        return len(self.trajectories)

    @property
    def frame_count(self) -> int:
        return sum(len(t) for t in self.trajectories)

    def equals(self, other: "Dataset") -> bool:
        if (self.dimension, self.action_alphabet_size, self.projection_seed, len(self)) != (
            other.dimension, other.action_alphabet_size, other.projection_seed, len(other)
        ):
            return False
        for a, b in zip(self.trajectories, other.trajectories):
            if a.id != b.id or a.embeddings.shape != b.embeddings.shape:
                return False
            # bitwise comparison so NaN payloads and signed zeros count
            if a.embeddings.tobytes() != b.embeddings.tobytes():
                return False
            if not np.array_equal(a.actions, b.actions):
                return False
        return True


class Violation(NamedTuple):
    trajectory_id: int | None
    offset: int | None
    reason: str


def validate_dataset(ds: Dataset) -> list[Violation]:
    """Return one record per broken dataset invariant; empty means valid."""
    out: list[Violation] = []
    d, n_actions = ds.dimension, ds.action_alphabet_size
    if d < 1:
        out.append(Violation(None, None, f"dimension must be >= 1, got {d}"))
    if n_actions < 1:
        out.append(Violation(None, None, f"action alphabet size must be >= 1, got {n_actions}"))
    for position, traj in enumerate(ds.trajectories):
        tid = traj.id
        if tid != position:
            out.append(Violation(tid, None, f"trajectory id {tid} at position {position}; ids must be dense 0..N-1"))
        T = len(traj.actions)
        if T < 1:
            out.append(Violation(tid, None, "empty trajectory"))
            continue
        emb = traj.embeddings
        if emb.ndim != 2 or emb.shape[0] != T:
            out.append(Violation(tid, None, f"{emb.shape[0]} embeddings for {T} actions"))
            continue
        if emb.shape[1] != d:
            out.append(Violation(tid, None, f"embedding dimension {emb.shape[1]} != dataset dimension {d}"))
            continue
        for offset in np.flatnonzero(~np.isfinite(emb).all(axis=1)):
            out.append(Violation(tid, int(offset), "non-finite embedding entry"))
        for offset in np.flatnonzero((traj.actions < 0) | (traj.actions >= n_actions)):
            out.append(Violation(tid, int(offset), "action out of alphabet"))
    return out
