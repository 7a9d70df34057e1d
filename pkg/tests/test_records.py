import math

import numpy as np
import pytest

from mona.records import (LemmaTracker, METRIC_COLUMNS, RunRecord, format_value, read_records,
                          records_to_csv, write_records)


def test_format_value():
    assert format_value(True) == "1" and format_value(np.bool_(False)) == "0"
    assert format_value(7) == "7"
    assert format_value(float("nan")) == "nan"
    assert format_value(-math.inf) == "-inf"
    assert float(format_value(0.1)) == 0.1


def test_csv_round_trip(tmp_path):
    recs = [RunRecord(step=1, train_loss=0.3, grad_norm=1 / 3, accel_ok=False),
            RunRecord(step=2, train_loss=math.inf, status="diverged")]
    path = write_records(tmp_path / "r.csv", recs)
    back = read_records(path)
    for a, b in zip(recs, back):
        for col in METRIC_COLUMNS:
            x, y = getattr(a, col), getattr(b, col)
            assert x == y or (isinstance(x, float) and math.isnan(x) and math.isnan(y))


def test_csv_excludes_timing():
    text = records_to_csv([RunRecord(step=1, train_loss=0.0, inner_ns=123)])
    assert "inner_ns" not in text.splitlines()[0]


def test_tracker_flags_excess():
    t = LemmaTracker(alpha=-50.0, momentum=0.9)
    assert t.update(1.0, 2.0, 101.0, 1010.0) == (True, True, True)
    assert t.update(0.5, 2.1, 0.0, 0.0) == (False, True, True)
    assert t.update(1.0, float("nan"), 0.0, 1011.0) == (True, True, False)


def test_seventeen_significant_digits():
    assert format_value(0.1) == "0.10000000000000001"
    assert format_value(1 / 3) == "0.33333333333333331"


def test_schema_is_fixed():
    header = records_to_csv([]).strip().split(",")
    assert tuple(header) == METRIC_COLUMNS
    assert header[:3] == ["step", "train_loss", "eval_loss"]
