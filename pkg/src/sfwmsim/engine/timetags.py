"""Per-detector time-tag streams and their on-disk formats.

Binary layout (little endian)::

    magic      6 bytes  b"SFWMTT"
    version    u16
    seed       u64
    hash       32 bytes  SHA-256 digest of the scenario
    n_records  u64
    records    n_records x (u32 detector id, u64 timestamp in ps), time ordered
"""
from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"SFWMTT"
VERSION = 1
_HEADER = struct.Struct("<6sHQ32sQ")
RECORD_DTYPE = np.dtype([("detector", "<u4"), ("timestamp", "<u8")])


@dataclass(frozen=True, eq=False)
class TimeTagStream:
    detector: int
    timestamps: np.ndarray  # int64 picoseconds, strictly increasing
    duration: float = 0.0  # s, acquisition length

    def __post_init__(self):
        ts = np.ascontiguousarray(self.timestamps, dtype=np.int64)
        if ts.ndim != 1:
            raise ValueError("timestamps must be one-dimensional")
        if ts.size > 1 and np.any(np.diff(ts) <= 0):
            raise ValueError("timestamps must be strictly increasing")
        ts.setflags(write=False)
        object.__setattr__(self, "timestamps", ts)

    def __len__(self) -> int:
        return int(self.timestamps.size)

    def rate(self) -> float:
        return len(self) / self.duration if self.duration > 0 else float("nan")

    def min_gap(self) -> int | None:
        if len(self) < 2:
            return None
        return int(np.diff(self.timestamps).min())


def merge_records(streams) -> np.ndarray:
    recs = [np.rec.fromarrays([np.full(len(s), s.detector, dtype="<u4"),
                               s.timestamps.astype("<u8")], dtype=RECORD_DTYPE) for s in streams]
    allrec = np.concatenate(recs) if recs else np.empty(0, RECORD_DTYPE)
    order = np.lexsort((allrec["detector"], allrec["timestamp"]))
    return np.asarray(allrec[order], dtype=RECORD_DTYPE)


def write_binary(path, streams, seed: int, scenario_hash: str) -> None:
    records = merge_records(streams)
    digest = bytes.fromhex(scenario_hash) if scenario_hash else bytes(32)
    if len(digest) != 32:
        raise ValueError("scenario hash must be a SHA-256 hex digest")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, seed, digest, len(records)))
        fh.write(records.tobytes())


def read_binary(path, duration: float = 0.0) -> tuple[dict[int, TimeTagStream], dict]:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, version, seed, digest, n = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValueError(f"{path}: not a time-tag file")
    if version != VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    body = data[_HEADER.size:]
    if len(body) != n * RECORD_DTYPE.itemsize:
        raise ValueError(f"{path}: expected {n} records, found {len(body) / RECORD_DTYPE.itemsize:g}")
    records = np.frombuffer(body, dtype=RECORD_DTYPE)
    streams = {int(d): TimeTagStream(int(d), records["timestamp"][records["detector"] == d].astype(np.int64),
                                     duration)
               for d in np.unique(records["detector"])}
    return streams, {"version": version, "seed": seed, "scenario_hash": digest.hex(), "n_records": n}


def write_csv(path, streams) -> None:
    records = merge_records(streams)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["detector", "timestamp_ps"])
        w.writerows(zip(records["detector"].tolist(), records["timestamp"].tolist()))


def read_csv(path, duration: float = 0.0) -> dict[int, TimeTagStream]:
    arr = np.loadtxt(path, delimiter=",", skiprows=1, dtype=np.int64, ndmin=2)
    if arr.size == 0:
        return {}
    return {int(d): TimeTagStream(int(d), arr[arr[:, 0] == d, 1], duration) for d in np.unique(arr[:, 0])}
