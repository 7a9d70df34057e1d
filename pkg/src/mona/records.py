"""Per-step run records, the running lemma-bound tracker, and CSV I/O."""

from __future__ import annotations

import csv
import io
from dataclasses import astuple, dataclass, fields
from pathlib import Path

import numpy as np


@dataclass
class RunRecord:
    step: int
    train_loss: float
    eval_loss: float = float("nan")
    grad_norm: float = float("nan")
    diff_norm: float = float("nan")
    accel_norm: float = float("nan")
    mixed_norm: float = float("nan")
    momentum_norm: float = float("nan")
    update_norm: float = float("nan")
    accel_ok: bool = True
    mixed_ok: bool = True
    momentum_ok: bool = True
    degenerate: bool = False
    fallback_ok: bool = True
    status: str = "ok"
    inner_ns: int = 0
    iter_ns: int = 0


TIMING_COLUMNS = ("inner_ns", "iter_ns")
METRIC_COLUMNS = tuple(f.name for f in fields(RunRecord) if f.name not in TIMING_COLUMNS)


@dataclass
class LemmaTracker:
    """Running max gradient norm and the acceleration/momentum bounds it implies."""

    alpha: float
    momentum: float
    slack: float = 1e-9
    g_max: float = 0.0

    def update(self, grad_norm: float, accel: float, mixed: float,
               mom: float) -> tuple[bool, bool, bool]:
        self.g_max = max(self.g_max, grad_norm)
        g_bar = self.g_max * (1.0 + 2.0 * abs(self.alpha))
        tol = 1.0 + self.slack

        def ok(value, bound):
            return not np.isfinite(value) or value <= bound * tol

        return (ok(accel, 2.0 * self.g_max),
                ok(mixed, g_bar),
                ok(mom, g_bar / (1.0 - self.momentum)))


def _global(traces, attr, names):
    vals = [getattr(traces[n], attr) for n in names]
    if not vals or any(not np.isfinite(v) for v in vals):
        return float("nan")
    return float(np.sqrt(sum(v * v for v in vals)))


def summarize_traces(traces, names, tracker: LemmaTracker | None) -> dict:
    """Collapse per-parameter traces into norms over the parameters ``names``.

    The acceleration and momentum recursions act entrywise, so the lemma
    bounds hold for the concatenation of all tracked parameters.
    """
    row = dict(
        grad_norm=_global(traces, "grad_norm", names),
        diff_norm=_global(traces, "diff_norm", names),
        accel_norm=_global(traces, "accel_norm", names),
        mixed_norm=_global(traces, "mixed_norm", names),
        momentum_norm=_global(traces, "momentum_norm", names),
        update_norm=_global(traces, "update_norm", list(traces)),
        degenerate=any(traces[n].degenerate for n in names),
    )
    if tracker is not None and names:
        row["accel_ok"], row["mixed_ok"], row["momentum_ok"] = tracker.update(
            row["grad_norm"], row["accel_norm"], row["mixed_norm"], row["momentum_norm"])
    return row


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if np.isnan(v):
            return "nan"
        if np.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.17g}"
    return str(v)


def records_to_csv(records, columns=METRIC_COLUMNS) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for rec in records:
        writer.writerow([format_value(getattr(rec, c)) for c in columns])
    return buf.getvalue()


def write_records(path, records, columns=METRIC_COLUMNS) -> Path:
    path = Path(path)
    path.write_text(records_to_csv(records, columns))
    return path


_BOOL = {f.name for f in fields(RunRecord) if f.type in ("bool", bool)}
_INT = {f.name for f in fields(RunRecord) if f.type in ("int", int)}


def read_records(path) -> list[RunRecord]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            kwargs = {}
            for key, raw in row.items():
                if key in _BOOL:
                    kwargs[key] = raw == "1"
                elif key in _INT:
                    kwargs[key] = int(raw)
                elif key == "status":
                    kwargs[key] = raw
                else:
                    kwargs[key] = float(raw)
            out.append(RunRecord(**kwargs))
    return out
