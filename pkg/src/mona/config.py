"""Experiment configuration: JSON in, validated dataclasses out, JSON back.

Every error names the offending field by path (``optimizers[1].momentum``)
so the CLI can report it verbatim.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np

from .landscapes import DoubleWellLandscape, QuadraticLandscape, StochasticGradientOracle
from .optimizers import ALGORITHMS, AdamConfig, OptimizerConfig, Precision
from .orthogonalize import NsConfig
from .toynet import MlpSpec, TeacherStudentTask


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


TASK_KINDS = ("teacher_student", "quadratic", "double_well")


def _build(cls, raw, path: str, extra_ok=()):
    """Instantiate dataclass ``cls`` from ``raw``, rejecting unknown keys."""
    if not isinstance(raw, dict):
        raise ConfigError(path, f"expected an object, got {type(raw).__name__}")
    names = {f.name for f in fields(cls)}
    for key in raw:
        if key not in names and key not in extra_ok:
            raise ConfigError(f"{path}.{key}", "unknown field")
    kwargs = {k: v for k, v in raw.items() if k in names}
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(path, str(exc)) from exc


@dataclass(frozen=True)
class TaskConfig:
    """Task block. Only the fields relevant to ``kind`` are read."""

    kind: str = "teacher_student"
    # teacher-student
    teacher_dims: tuple[int, ...] = (4, 16, 16, 4)
    student_dims: tuple[int, ...] = (4, 16, 16, 4)
    activation: str = "tanh"
    teacher_seed: int = 10_000
    teacher_scale: float = 1.0
    batch_size: int = 32
    eval_size: int = 512
    data_seed: int = 0
    # landscapes
    shape: tuple[int, int] = (2, 2)
    eigs: tuple[float, ...] = (4.0, 4.0, 1.0, 1.0)
    basis_seed: int | None = None
    noise_sigma: float = 0.0
    clip_bound: float = float("inf")
    init: Any = 1.0                   # scale of a seeded N(0, 1) start, or an explicit matrix
    sharp_center: Any = None
    flat_center: Any = None
    sharp_depth: float = 1.0
    flat_depth: float = 1.0
    sharp_width: float = 0.25
    flat_width: float = 2.0
    start: str = "sharp"
    jitter: float = 0.05

    def __post_init__(self):
        if self.kind not in TASK_KINDS:
            raise ValueError(f"kind must be one of {TASK_KINDS}, got {self.kind!r}")
        object.__setattr__(self, "teacher_dims", tuple(self.teacher_dims))
        object.__setattr__(self, "student_dims", tuple(self.student_dims))
        object.__setattr__(self, "shape", tuple(self.shape))
        object.__setattr__(self, "eigs", tuple(float(e) for e in self.eigs))
        if len(self.shape) != 2 or min(self.shape) < 1:
            raise ValueError(f"shape must be two positive sizes, got {self.shape}")
        if self.start not in ("sharp", "flat"):
            raise ValueError(f"start must be 'sharp' or 'flat', got {self.start!r}")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")
        # build once so bad geometry fails at parse time
        if self.kind == "teacher_student":
            self.teacher_student()
        elif self.kind == "quadratic":
            self.quadratic()
        else:
            self.double_well()

    def teacher_student(self) -> TeacherStudentTask:
        teacher = MlpSpec(self.teacher_dims, self.activation, self.teacher_seed, self.teacher_scale)
        return TeacherStudentTask(teacher, self.student_dims, self.batch_size, self.eval_size,
                                  self.data_seed)

    def quadratic(self) -> QuadraticLandscape:
        if self.basis_seed is None:
            return QuadraticLandscape.diagonal(self.eigs, self.shape)
        return QuadraticLandscape.random(self.shape, self.eigs, self.basis_seed)

    def double_well(self) -> DoubleWellLandscape:
        sc = np.zeros(self.shape) if self.sharp_center is None else np.asarray(self.sharp_center, float)
        if self.flat_center is None:
            fc = np.zeros(self.shape)
            fc[0, 0] = 4.0
        else:
            fc = np.asarray(self.flat_center, float)
        return DoubleWellLandscape(sc, fc, self.sharp_depth, self.flat_depth,
                                   self.sharp_width, self.flat_width)

    def landscape(self):
        return self.quadratic() if self.kind == "quadratic" else self.double_well()

    def oracle(self, seed: int) -> StochasticGradientOracle:
        return StochasticGradientOracle(self.landscape(), self.noise_sigma, self.clip_bound, seed)

    def initial_point(self, seed: int) -> np.ndarray:
        rng = np.random.default_rng([seed, 7])
        if self.kind == "double_well":
            l = self.double_well()
            centre = l.sharp_center if self.start == "sharp" else l.flat_center
            return centre + self.jitter * rng.standard_normal(self.shape)
        if np.isscalar(self.init):
            return float(self.init) * rng.standard_normal(self.shape)
        return np.asarray(self.init, dtype=float).reshape(self.shape)


@dataclass(frozen=True)
class OptimizerBlock:
    label: str
    algorithm: str
    config: OptimizerConfig


def _optimizer_block(raw, path: str, default_precision: str) -> OptimizerBlock:
    if not isinstance(raw, dict):
        raise ConfigError(path, "expected an object")
    raw = dict(raw)
    algorithm = raw.pop("algorithm", None)
    if algorithm not in ALGORITHMS:
        raise ConfigError(f"{path}.algorithm", f"unknown optimizer {algorithm!r}; expected one of {ALGORITHMS}")
    label = raw.pop("label", algorithm)
    if not isinstance(label, str) or not label:
        raise ConfigError(f"{path}.label", "must be a non-empty string")
    if "ns" in raw:
        raw["ns"] = _build(NsConfig, raw["ns"], f"{path}.ns")
    if "adam" in raw:
        raw["adam"] = _build(AdamConfig, raw["adam"], f"{path}.adam")
    raw.setdefault("precision", default_precision)
    if "gamma" in raw and raw["gamma"] == "muon_rms_match":
        raw["gamma"] = None
    return OptimizerBlock(label, algorithm, _build(OptimizerConfig, raw, path))


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    task: TaskConfig
    optimizers: tuple[OptimizerBlock, ...]
    steps: int
    seeds: tuple[int, ...]
    eval_every: int = 100
    output_dir: str = "runs"
    precision: str = "fp32_buffered"
    bench: dict = field(default_factory=dict)

    def optimizer(self, label: str) -> OptimizerBlock:
        for block in self.optimizers:
            if block.label == label:
                return block
        raise KeyError(label)

    def resolved(self) -> dict:
        """Every field, defaults included, as plain JSON types."""
        task = asdict(self.task)
        blocks = []
        for b in self.optimizers:
            cfg = asdict(b.config)
            cfg["precision"] = b.config.precision.value
            blocks.append({"label": b.label, "algorithm": b.algorithm, **cfg})
        return _jsonable({
            "name": self.name, "task": task, "optimizers": blocks, "steps": self.steps,
            "seeds": list(self.seeds), "eval_every": self.eval_every,
            "output_dir": self.output_dir, "precision": self.precision, "bench": self.bench,
        })


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, float) and not np.isfinite(v):
        return str(v)
    return v


_TOP = {"name", "task", "optimizers", "steps", "seeds", "eval_every", "output_dir", "precision", "bench"}


def _int(raw, path, minimum):
    if isinstance(raw, bool) or not isinstance(raw, int) or raw < minimum:
        raise ConfigError(path, f"must be an integer >= {minimum}, got {raw!r}")
    return raw


def parse_config(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    for key in raw:
        if key not in _TOP:
            raise ConfigError(key, "unknown field")
    for key in ("name", "task", "optimizers", "steps", "seeds"):
        if key not in raw:
            raise ConfigError(key, "missing required field")
    name = raw["name"]
    if not isinstance(name, str) or not name:
        raise ConfigError("name", "must be a non-empty string")
    precision = raw.get("precision", "fp32_buffered")
    try:
        Precision(precision)
    except ValueError:
        raise ConfigError("precision", f"unknown precision mode {precision!r}") from None
    task_raw = raw["task"]
    if isinstance(task_raw, dict):
        task_raw = {k: (float(v) if k == "clip_bound" and isinstance(v, str) else v)
                    for k, v in task_raw.items()}
    task = _build(TaskConfig, task_raw, "task")
    if not isinstance(raw["optimizers"], list) or not raw["optimizers"]:
        raise ConfigError("optimizers", "must be a non-empty list")
    blocks = tuple(_optimizer_block(b, f"optimizers[{i}]", precision)
                   for i, b in enumerate(raw["optimizers"]))
    labels = [b.label for b in blocks]
    if len(set(labels)) != len(labels):
        raise ConfigError("optimizers", f"labels must be unique, got {labels}")
    steps = _int(raw["steps"], "steps", 1)
    seeds = raw["seeds"]
    if not isinstance(seeds, list) or not seeds:
        raise ConfigError("seeds", "must be a non-empty list of integers")
    seeds = tuple(_int(s, f"seeds[{i}]", 0) for i, s in enumerate(seeds))
    if len(set(seeds)) != len(seeds):
        raise ConfigError("seeds", "seeds must be distinct")
    eval_every = _int(raw.get("eval_every", 100), "eval_every", 1)
    output_dir = raw.get("output_dir", "runs")
    if not isinstance(output_dir, str):
        raise ConfigError("output_dir", "must be a string")
    bench = raw.get("bench", {})
    if not isinstance(bench, dict):
        raise ConfigError("bench", "must be an object")
    return ExperimentConfig(name, task, blocks, steps, seeds, eval_every, output_dir, precision, bench)


def load_config(path) -> ExperimentConfig:
    text = Path(path).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<root>", f"invalid JSON: {exc}") from exc
    return parse_config(raw)
