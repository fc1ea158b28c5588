"""Comparison policies with the same begin/act contract as :class:`ZipPolicy`."""

from __future__ import annotations

import numpy as np

from .policy import StepInfo


class RandomPolicy:
    """Uniformly random actions from a seeded generator."""

    name = "random"

    def __init__(self, n_actions: int, seed: int = 0):
        self.n_actions = n_actions
        self.seed = seed
        self._rng = np.random.default_rng(seed)

    def reseed(self, seed: int) -> None:
        self.seed = seed
        self._rng = np.random.default_rng(seed)

    def begin(self, embedding) -> StepInfo:
        self._rng = np.random.default_rng(self.seed)
        return self.act(embedding)

    def act(self, embedding) -> StepInfo:
        return StepInfo(int(self._rng.integers(self.n_actions)))


class KnnStepPolicy:
    """Fresh nearest-frame search every step, copying only that frame's action."""

    name = "knn-step"

    def __init__(self, index):
        self.index = index

    def begin(self, embedding) -> StepInfo:
        return self.act(embedding)

    def act(self, embedding) -> StepInfo:
        result = self.index.nearest(embedding)
        return StepInfo(self.index.action_at(result.frame), result.frame, result.distance, result.distance)
