"""Exact L1 nearest-neighbour search over dataset frames.

Only frames with at least one successor are indexed (offset <= T - 2).  Ties
are broken by (trajectory id, offset), which is also the storage order, so
"first minimum in storage order" is the tie-break everywhere.

Two implementations share one interface: :class:`LinearIndex` scans every
entry, :class:`PartitionedIndex` groups entries into buckets keyed by a coarse
quantisation of the highest-variance coordinates and skips any bucket whose
bounding-box lower bound already exceeds the best distance found.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .latent import Dataset, DimensionMismatch, row_l1, validate_dataset


class FrameRef(NamedTuple):
    trajectory_id: int
    offset: int


class SearchResult(NamedTuple):
    frame: FrameRef
    distance: float


class NoCandidateError(LookupError):
    """Raised for searches that have no admissible candidate."""


class InvalidDataset(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        head = "; ".join(
            f"trajectory {v.trajectory_id} offset {v.offset}: {v.reason}" for v in self.violations[:5]
        )
        more = f" (+{len(self.violations) - 5} more)" if len(self.violations) > 5 else ""
        super().__init__(f"dataset has {len(self.violations)} violation(s): {head}{more}")


class LinearIndex:
    """Brute-force scan over every indexed frame."""

    kind = "linear"

    def __init__(self, ds: Dataset):
        violations = validate_dataset(ds)
        if violations:
            raise InvalidDataset(violations)
        self.dataset = ds
        self.dimension = ds.dimension
        traj_ids, offsets, rows = [], [], []
        for traj in ds.trajectories:
            n = len(traj) - 1
            if n <= 0:
                continue
            traj_ids.append(np.full(n, traj.id, dtype=np.int64))
            offsets.append(np.arange(n, dtype=np.int64))
            rows.append(traj.embeddings[:n])
        if rows:
            self.traj_ids = np.concatenate(traj_ids)
            self.offsets = np.concatenate(offsets)
            self.embeddings = np.ascontiguousarray(np.concatenate(rows), dtype=np.float64)
        else:
            self.traj_ids = np.zeros(0, dtype=np.int64)
            self.offsets = np.zeros(0, dtype=np.int64)
            self.embeddings = np.zeros((0, ds.dimension), dtype=np.float64)
        # entry position of trajectory j's frame 0, used to map FrameRef -> entry
        self._first_entry = {}
        pos = 0
        for traj in ds.trajectories:
            self._first_entry[traj.id] = pos
            pos += max(len(traj) - 1, 0)
        for arr in (self.traj_ids, self.offsets, self.embeddings):
            arr.setflags(write=False)

    def __len__(self) -> int:
        return len(self.traj_ids)

    def entry_of(self, ref: FrameRef) -> int | None:
        """Storage position of an indexed frame, or None if not indexed."""
        start = self._first_entry.get(ref.trajectory_id)
        if start is None:
            return None
        T = len(self.dataset.trajectories[ref.trajectory_id])
        if not 0 <= ref.offset <= T - 2:
            return None
        return start + ref.offset

    def _check_query(self, query) -> np.ndarray:
        q = np.asarray(query, dtype=np.float64)
        if q.ndim != 1 or q.shape[0] != self.dimension:
            raise DimensionMismatch(f"query has shape {q.shape}, index dimension is {self.dimension}")
        if len(self) == 0:
            raise NoCandidateError("index is empty")
        return q

    def _result(self, entry: int, distance: float) -> SearchResult:
        return SearchResult(FrameRef(int(self.traj_ids[entry]), int(self.offsets[entry])), float(distance))

    def _search(self, q: np.ndarray, skip: int | None) -> tuple[int, float]:
        dists = row_l1(self.embeddings, q)
        if skip is not None:
            dists[skip] = np.inf
        entry = int(np.argmin(dists))
        return entry, dists[entry]

    def nearest(self, query) -> SearchResult:
        q = self._check_query(query)
        return self._result(*self._search(q, None))

    def nearest_excluding(self, query, excluded: FrameRef) -> SearchResult:
        q = self._check_query(query)
        skip = self.entry_of(FrameRef(*excluded))
        if len(self) - (skip is not None) <= 0:
            raise NoCandidateError("every candidate frame is excluded")
        return self._result(*self._search(q, skip))

    def embedding_at(self, ref: FrameRef) -> np.ndarray:
        return self.dataset.trajectories[ref.trajectory_id].embeddings[ref.offset]

    def action_at(self, ref: FrameRef) -> int:
        return int(self.dataset.trajectories[ref.trajectory_id].actions[ref.offset])

    def trajectory_length(self, trajectory_id: int) -> int:
        return len(self.dataset.trajectories[trajectory_id])


class PartitionedIndex(LinearIndex):
    """Bucketed exact search with per-bucket L1 lower bounds.

    ``split_dims`` coordinates (highest variance first) are each cut into
    ``levels`` quantile bins; every non-empty cell of that grid is a bucket
    holding its entries in storage order together with the per-coordinate
    minimum and maximum over the bucket.
    """

    kind = "partitioned"

    def __init__(self, ds: Dataset, split_dims: int = 3, levels: int = 4):
        super().__init__(ds)
        n, d = self.embeddings.shape
        split_dims = max(1, min(split_dims, d))
        if n == 0:
            self._buckets = []
            self._lo = np.zeros((0, d))
            self._hi = np.zeros((0, d))
            return
        var = self.embeddings.var(axis=0)
        # stable sort: equal variances fall back to coordinate order
        self.split_coords = np.argsort(-var, kind="stable")[:split_dims]
        key = np.zeros(n, dtype=np.int64)
        for c in self.split_coords:
            col = self.embeddings[:, c]
            edges = np.unique(np.quantile(col, np.linspace(0, 1, levels + 1)[1:-1]))
            key = key * levels + np.searchsorted(edges, col, side="right")
        order = np.argsort(key, kind="stable")
        cuts = np.flatnonzero(np.diff(key[order])) + 1
        self._buckets = [np.sort(b) for b in np.split(order, cuts)]
        self._lo = np.stack([self.embeddings[b].min(axis=0) for b in self._buckets])
        self._hi = np.stack([self.embeddings[b].max(axis=0) for b in self._buckets])
        self._rows = [np.ascontiguousarray(self.embeddings[b]) for b in self._buckets]

    @property
    def bucket_count(self) -> int:
        return len(self._buckets)

    def lower_bounds(self, q: np.ndarray) -> np.ndarray:
        # Each term is <= |q_i - x_i| for every x in the box and the same
        # reduction is used as for exact distances, so rounding keeps the bound.
        gap = np.maximum(np.maximum(self._lo - q, q - self._hi), 0.0)
        return gap.sum(axis=1)

    def _search(self, q: np.ndarray, skip: int | None) -> tuple[int, float]:
        bounds = self.lower_bounds(q)
        best_entry, best = -1, np.inf
        for b in np.argsort(bounds, kind="stable"):
            if bounds[b] > best:
                break
            entries = self._buckets[b]
            dists = row_l1(self._rows[b], q)
            if skip is not None:
                dists[entries == skip] = np.inf
            i = int(np.argmin(dists))
            dist = dists[i]
            if dist < best or (dist == best and entries[i] < best_entry):
                best_entry, best = int(entries[i]), dist
        return best_entry, best


def build_index(ds: Dataset, kind: str = "partitioned", **options) -> LinearIndex:
    """Build a search index over ``ds``; raises :class:`InvalidDataset` if it does not validate."""
    if kind == "partitioned":
        return PartitionedIndex(ds, **options)
    if kind == "linear":
        return LinearIndex(ds)
    raise ValueError(f"unknown index kind {kind!r}")
