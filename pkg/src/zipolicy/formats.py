"""On-disk formats.

Dataset file (little-endian)::

    b"ZIPD"  u32 version=1  u32 d  u32 A  u64 projection_seed  u32 N
    N x ( u32 T, T x ( d x f32 embedding, u32 action ) )

Episode logs are JSON lines: one header object, then one object per step and
one per search event.  Embedding exports are CSV with a header row.
"""

from __future__ import annotations

import csv
import io
import json
import struct
from pathlib import Path

import numpy as np

from .episode import EpisodeLog, StepRecord
from .index import FrameRef
from .latent import Dataset, Trajectory
from .policy import EventKind, SearchEvent

MAGIC = b"ZIPD"
VERSION = 1
_HEADER = struct.Struct("<4sIIIQI")


class FormatError(ValueError):
    pass


def _frame_dtype(d: int) -> np.dtype:
    return np.dtype([("embedding", "<f4", (d,)), ("action", "<u4")])


def dataset_to_bytes(ds: Dataset) -> bytes:
    buf = io.BytesIO()
    buf.write(_HEADER.pack(MAGIC, VERSION, ds.dimension, ds.action_alphabet_size, ds.projection_seed, len(ds)))
    dtype = _frame_dtype(ds.dimension)
    for traj in ds.trajectories:
        records = np.empty(len(traj), dtype=dtype)
        records["embedding"] = traj.embeddings
        records["action"] = traj.actions
        buf.write(struct.pack("<I", len(traj)))
        buf.write(records.tobytes())
    return buf.getvalue()


def dataset_from_bytes(data: bytes) -> Dataset:
    if len(data) < _HEADER.size:
        raise FormatError("dataset file truncated in header")
    magic, version, d, n_actions, seed, n = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise FormatError(f"unsupported dataset version {version}, expected {VERSION}")
    dtype = _frame_dtype(d)
    pos = _HEADER.size
    trajectories = []
    for tid in range(n):
        if pos + 4 > len(data):
            raise FormatError(f"dataset file truncated before trajectory {tid}")
        (T,) = struct.unpack_from("<I", data, pos)
        pos += 4
        end = pos + T * dtype.itemsize
        if end > len(data):
            raise FormatError(f"dataset file truncated inside trajectory {tid}")
        records = np.frombuffer(data, dtype=dtype, count=T, offset=pos)
        trajectories.append(Trajectory(tid, records["embedding"].copy(), records["action"].astype(np.int64)))
        pos = end
    if pos != len(data):
        raise FormatError(f"{len(data) - pos} trailing bytes after last trajectory")
    return Dataset(d, n_actions, trajectories, seed)


def write_dataset(path, ds: Dataset) -> None:
    Path(path).write_bytes(dataset_to_bytes(ds))


def read_dataset(path) -> Dataset:
    return dataset_from_bytes(Path(path).read_bytes())


# ---------------------------------------------------------------- episode logs


def _frame_json(f):
    return None if f is None else [f.trajectory_id, f.offset]


def _frame_from(v):
    return None if v is None else FrameRef(int(v[0]), int(v[1]))


def episode_log_lines(log: EpisodeLog) -> list[str]:
    lines = [json.dumps({"type": "episode", "policy": log.policy, "seed": log.seed, "spawn_seed": log.spawn_seed})]
    for s in log.steps:
        lines.append(json.dumps({
            "type": "step", "step": s.step, "action": s.action, "cursor": _frame_json(s.frame),
            "dist": s.dist, "reference_distance": s.reference_distance,
            "event": None if s.event is None else EventKind(s.event).value, "in_goal": s.in_goal,
        }))
    for e in log.events:
        lines.append(json.dumps({
            "type": "event", "kind": EventKind(e.kind).value, "step": e.step, "old_frame": _frame_json(e.old_frame),
            "new_frame": _frame_json(e.new_frame), "distance_at_trigger": e.distance_at_trigger,
        }))
    return lines


def write_episode_logs(path, logs) -> None:
    with open(path, "w") as fh:
        for log in logs:
            for line in episode_log_lines(log):
                fh.write(line + "\n")


def read_episode_logs(path) -> list[EpisodeLog]:
    logs: list[EpisodeLog] = []
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            if not line.strip():
                continue
            rec = json.loads(line)
            kind = rec.get("type")
            if kind == "episode":
                logs.append(EpisodeLog(rec["policy"], rec["seed"], rec["spawn_seed"]))
            elif not logs:
                raise FormatError(f"line {n}: record before episode header")
            elif kind == "step":
                logs[-1].steps.append(StepRecord(
                    rec["step"], rec["action"], _frame_from(rec["cursor"]), rec["dist"], rec["reference_distance"],
                    None if rec["event"] is None else EventKind(rec["event"]), rec["in_goal"],
                ))
            elif kind == "event":
                logs[-1].events.append(SearchEvent(
                    EventKind(rec["kind"]), rec["step"], _frame_from(rec["old_frame"]),
                    _frame_from(rec["new_frame"]), rec["distance_at_trigger"],
                ))
            else:
                raise FormatError(f"line {n}: unknown record type {kind!r}")
    return logs


# ----------------------------------------------------------- embedding export


def export_embeddings(ds: Dataset, count: int, in_goal: list[list[bool]] | None, out) -> int:
    """Write (trajectory_id, offset, in_goal, e0..e{d-1}) rows for the first ``count`` trajectories.

    Coordinates use 9 significant digits, enough for float32 to round-trip.
    ``in_goal`` holds per-frame goal flags per trajectory; without it every
    flag is written as 0.  Returns the number of rows.
    """
    if count < 0 or count > len(ds):
        raise ValueError(f"cannot export {count} trajectories from a dataset of {len(ds)}")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["trajectory_id", "offset", "in_goal", *(f"e{i}" for i in range(ds.dimension))])
    rows = 0
    for traj in ds.trajectories[:count]:
        flags = in_goal[traj.id] if in_goal is not None else [False] * len(traj)
        for offset, emb in enumerate(traj.embeddings):
            writer.writerow([traj.id, offset, int(bool(flags[offset])), *(f"{float(v):.9g}" for v in emb)])
            rows += 1
    return rows


def import_embeddings(src) -> tuple[list[tuple[int, int, bool]], np.ndarray]:
    """Inverse of :func:`export_embeddings`: row labels and a float32 matrix."""
    reader = csv.reader(src)
    header = next(reader)
    d = len(header) - 3
    labels, values = [], []
    for row in reader:
        labels.append((int(row[0]), int(row[1]), row[2] == "1"))
        values.append([float(v) for v in row[3:]])
    return labels, np.asarray(values, dtype=np.float32).reshape(-1, d)

