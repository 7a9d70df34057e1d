import json

import numpy as np
import pytest

from mona.config import ConfigError, load_config, parse_config
from mona.optimizers import Precision


def base():
    return {
        "name": "t",
        "task": {"kind": "teacher_student", "teacher_dims": [4, 8, 4], "student_dims": [4, 8, 4]},
        "optimizers": [{"algorithm": "mona"}, {"algorithm": "adamw", "learning_rate": 0.003}],
        "steps": 10,
        "seeds": [0, 1],
    }


def test_parses_defaults():
    cfg = parse_config(base())
    assert cfg.optimizer("mona").config.accel_alpha == pytest.approx(-50.0)
    assert cfg.eval_every == 100 and cfg.precision == "fp32_buffered"


@pytest.mark.parametrize("patch,path", [
    (lambda r: r["optimizers"].append({"algorithm": "sgd"}), "optimizers[2].algorithm"),
    (lambda r: r["optimizers"][0].update(momentum=1.5), "optimizers[0]"),
    (lambda r: r["optimizers"][0].update(ns={"steps": 0}), "optimizers[0].ns"),
    (lambda r: r["optimizers"][0].update(bogus=1), "optimizers[0].bogus"),
    (lambda r: r.update(extra=1), "extra"),
    (lambda r: r.pop("steps"), "steps"),
    (lambda r: r.update(steps=0), "steps"),
    (lambda r: r.update(seeds=[0, 0]), "seeds"),
    (lambda r: r.update(seeds=[-1]), "seeds[0]"),
    (lambda r: r.update(precision="fp8"), "precision"),
    (lambda r: r["task"].update(kind="cnn"), "task"),
    (lambda r: r["task"].update(student_dims=[3, 4]), "task"),
    (lambda r: r["optimizers"].append({"algorithm": "mona"}), "optimizers"),
])
def test_field_level_errors(patch, path):
    raw = base()
    patch(raw)
    with pytest.raises(ConfigError) as info:
        parse_config(raw)
    assert info.value.path == path
    assert str(info.value).startswith(path + ":")


def test_labels_allow_repeated_algorithms():
    raw = base()
    raw["optimizers"].append({"algorithm": "mona", "label": "mona_b", "accel_beta": 0.975})
    cfg = parse_config(raw)
    assert cfg.optimizer("mona_b").config.accel_alpha == pytest.approx(-20.0)


def test_top_level_precision_is_default():
    raw = base()
    raw["precision"] = "bf16_streaming"
    raw["optimizers"] = [{"algorithm": "mona_lite"}]
    assert parse_config(raw).optimizers[0].config.precision is Precision.BF16_STREAMING


def test_gamma_keyword():
    raw = base()
    raw["optimizers"][0]["gamma"] = "muon_rms_match"
    assert parse_config(raw).optimizers[0].config.gamma is None


def test_resolved_round_trips(tmp_path):
    raw = base()
    raw["task"] = {"kind": "quadratic", "eigs": [4, 4, 1, 1], "noise_sigma": 0.1, "clip_bound": "inf"}
    cfg = parse_config(raw)
    resolved = cfg.resolved()
    text = json.dumps(resolved)
    again = parse_config(json.loads(text))
    assert again.resolved() == resolved
    path = tmp_path / "c.json"
    path.write_text(text)
    assert load_config(path).resolved() == resolved


def test_landscape_tasks():
    raw = base()
    raw["task"] = {"kind": "double_well", "shape": [1, 2], "noise_sigma": 0.7}
    cfg = parse_config(raw)
    x0 = cfg.task.initial_point(3)
    assert x0.shape == (1, 2) and np.linalg.norm(x0) < 0.5
    assert np.array_equal(cfg.task.initial_point(3), x0)
    raw["task"] = {"kind": "quadratic", "init": [[1, 2], [3, 4]]}
    assert parse_config(raw).task.initial_point(0)[1, 1] == 4.0


def test_invalid_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{")
    with pytest.raises(ConfigError):
        load_config(path)
    with pytest.raises(OSError):
        load_config(tmp_path / "missing.json")


@pytest.mark.parametrize("name", ["smoke", "ordering", "quadratic", "escape", "bench"])
def test_shipped_configs_parse(name):
    from pathlib import Path
    load_config(Path(__file__).parent.parent / "configs" / f"{name}.json")
