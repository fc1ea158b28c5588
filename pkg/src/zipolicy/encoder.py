"""Deterministic stand-in for a frozen pre-trained encoder.

Observations are agent-centred cell-code windows plus a heading.  The raw
feature vector is the one-hot encoding of every cell followed by the heading
one-hot; it is mapped to ``dimension`` coordinates by a fixed random
projection drawn from a splitmix64 stream, and the last ``smoothing_window``
projections are averaged to give the embedding.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .rng import uniform_signed


class Cell(IntEnum):
    EMPTY = 0
    WALL = 1
    GOAL = 2
    OUT_OF_BOUNDS = 3


class Heading(IntEnum):
    N = 0
    E = 1
    S = 2
    W = 3


N_CELL_CODES = len(Cell)
N_HEADINGS = len(Heading)
DEFAULT_PROJECTION_SEED = 0x5EED_2A1D_0F_C0FFEE


@dataclass(frozen=True, eq=False)
class Observation:
    grid_window: np.ndarray  # (w, w) int8 cell codes, agent at the centre
    heading: Heading
    tick: int = 0

    @property
    def window_size(self) -> int:
        return self.grid_window.shape[0]

    @property
    def in_goal(self) -> bool:
        c = self.window_size // 2
        return bool(self.grid_window[c, c] == Cell.GOAL)

    def key(self) -> tuple:
        """Hashable identity ignoring ``tick``, which the encoder never sees."""
        return (self.grid_window.tobytes(), self.grid_window.shape, int(self.heading))


@dataclass(frozen=True)
class EncoderConfig:
    dimension: int = 32
    smoothing_window: int = 2
    window_size: int = 3
    projection_seed: int = DEFAULT_PROJECTION_SEED

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError(f"dimension must be >= 1, got {self.dimension}")
        if self.smoothing_window < 1:
            raise ValueError(f"smoothing_window must be >= 1, got {self.smoothing_window}")
        if self.window_size < 3 or self.window_size % 2 == 0:
            raise ValueError(f"window_size must be odd and >= 3, got {self.window_size}")

    @property
    def feature_size(self) -> int:
        return self.window_size**2 * N_CELL_CODES + N_HEADINGS


def projection_matrix(cfg: EncoderConfig) -> np.ndarray:
    """The (feature_size, dimension) projection, uniform in [-1, 1)."""
    values = uniform_signed(cfg.projection_seed, cfg.feature_size * cfg.dimension)
    return values.reshape(cfg.feature_size, cfg.dimension)


class GridEncoder:
    """Maps an observation stream to embeddings, keeping the smoothing history.

    One instance per episode; call :meth:`reset_history` between episodes.
    The projection matrix is shared read-only and may be passed in to avoid
    regenerating it.
    """

    def __init__(self, cfg: EncoderConfig | None = None, projection: np.ndarray | None = None):
        self.cfg = cfg or EncoderConfig()
        if projection is None:
            projection = projection_matrix(self.cfg)
        if projection.shape != (self.cfg.feature_size, self.cfg.dimension):
            raise ValueError(f"projection shape {projection.shape} does not match config")
        projection.setflags(write=False)
        self.projection = projection
        self._history: deque[np.ndarray] = deque(maxlen=max(self.cfg.smoothing_window - 1, 0))

    @property
    def history_length(self) -> int:
        return len(self._history)

    def reset_history(self) -> None:
        self._history.clear()

    def feature_indices(self, obs: Observation) -> np.ndarray:
        w = self.cfg.window_size
        grid = np.asarray(obs.grid_window)
        if grid.shape != (w, w):
            raise ValueError(f"observation window {grid.shape} does not match configured {w}x{w}")
        codes = grid.reshape(-1).astype(np.int64)
        if codes.min() < 0 or codes.max() >= N_CELL_CODES:
            raise ValueError("observation contains unknown cell codes")
        heading = int(obs.heading)
        if not 0 <= heading < N_HEADINGS:
            raise ValueError(f"unknown heading {heading}")
        cells = np.arange(w * w) * N_CELL_CODES + codes
        return np.append(cells, w * w * N_CELL_CODES + heading)

    def raw_projection(self, obs: Observation) -> np.ndarray:
        # The feature vector is one-hot per cell, so the projection is a sum of
        # selected rows.  Rounding to float32 here keeps the trailing mean exact.
        rows = self.projection[self.feature_indices(obs)]
        return rows.sum(axis=0).astype(np.float32)

    def encode(self, obs: Observation) -> np.ndarray:
        """Embedding (float32, length ``dimension``) of ``obs`` given the history."""
        raw = self.raw_projection(obs)
        stack = [*self._history, raw]
        total = np.zeros(self.cfg.dimension, dtype=np.float64)
        for vec in stack:
            total += vec
        emb = (total / len(stack)).astype(np.float32)
        if self._history.maxlen:
            self._history.append(raw)
        return emb
