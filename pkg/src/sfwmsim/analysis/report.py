"""Structured summaries and flat tables."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class Metric:
    metric: str
    value: float
    error: float | None = None
    reference: float | str | None = None  # reference value, when there is one
    inputs_hash: str = ""
    note: str = ""


def _clean(x):
    if isinstance(x, np.generic):
        x = x.item()
    if isinstance(x, np.ndarray):
        x = x.tolist()
    if isinstance(x, float):
        if math.isnan(x) or math.isinf(x):
            return str(x)
        return float(f"{x:.12g}")
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    return x


def to_json(obj) -> str:
    """Deterministic JSON (sorted keys, 12 significant digits)."""
    if isinstance(obj, list):
        obj = [asdict(m) if isinstance(m, Metric) else m for m in obj]
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(to_json(obj))


def write_table(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([f"{v:.10g}" if isinstance(v, float) else v for v in row])


def format_summary(title: str, metrics: list[Metric]) -> str:
    """Human-readable side-by-side table of reference and simulated values."""
    lines = [title, "-" * len(title), f"{'metric':<36} {'reference':>14} {'simulated':>14} {'error':>10}"]
    for m in metrics:
        ref = "" if m.reference is None else (f"{m.reference:.6g}" if isinstance(m.reference, float) else str(m.reference))
        err = "" if m.error is None else f"{m.error:.3g}"
        lines.append(f"{m.metric:<36} {ref:>14} {m.value:>14.6g} {err:>10}" + (f"  {m.note}" if m.note else ""))
    return "\n".join(lines) + "\n"
