"""Small fully-connected networks with exact backprop, and a teacher-student
regression task used as the end-to-end optimizer testbed."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .matrixcore import ShapeError
from .optimizers import Optimizer, OptimizerConfig, ParamKind
from .records import LemmaTracker, RunRecord, summarize_traces

ACTIVATIONS = ("tanh", "relu")


@dataclass(frozen=True)
class MlpSpec:
    layer_dims: tuple[int, ...]
    activation: str = "tanh"
    init_seed: int = 0
    init_scale: float | None = None

    def __post_init__(self):
        dims = tuple(int(d) for d in self.layer_dims)
        if len(dims) < 2 or min(dims) < 1:
            raise ValueError(f"layer_dims needs at least two positive sizes, got {self.layer_dims}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}, got {self.activation!r}")
        if self.init_scale is not None and not self.init_scale > 0:
            raise ValueError("init_scale must be positive")
        object.__setattr__(self, "layer_dims", dims)

    def init_params(self) -> dict[str, np.ndarray]:
        """Seeded uniform(-s, s) weights (``s = 1/sqrt(fan_in)`` unless
        ``init_scale`` is set); biases are stored as column vectors."""
        rng = np.random.default_rng(self.init_seed)
        params = {}
        for i, (fan_in, fan_out) in enumerate(zip(self.layer_dims[:-1], self.layer_dims[1:])):
            s = self.init_scale if self.init_scale is not None else 1.0 / np.sqrt(fan_in)
            params[f"layers.{i}.weight"] = rng.uniform(-s, s, size=(fan_in, fan_out))
            params[f"layers.{i}.bias"] = rng.uniform(-s, s, size=(fan_out, 1))
        return params


def _act(z, kind):
    if kind == "tanh":
        return np.tanh(z)
    return np.maximum(z, 0.0)


def _act_grad(z, a, kind):
    if kind == "tanh":
        return 1.0 - a * a
    return (z > 0).astype(np.float64)


def n_layers(params: dict[str, np.ndarray]) -> int:
    return sum(1 for k in params if k.endswith(".weight"))


def forward(params: dict[str, np.ndarray], x: np.ndarray, activation: str = "tanh") -> np.ndarray:
    h = np.asarray(x, dtype=np.float64)
    n = n_layers(params)
    for i in range(n):
        h = h @ params[f"layers.{i}.weight"] + params[f"layers.{i}.bias"].T
        if i < n - 1:
            h = _act(h, activation)
    return h


def forward_backward(params: dict[str, np.ndarray], x: np.ndarray, y: np.ndarray,
                     activation: str = "tanh") -> tuple[float, dict[str, np.ndarray]]:
    """Loss ``mean_batch ||f(x) - y||^2`` and its exact gradient per parameter.

    The output layer is linear; hidden layers use ``activation``.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = n_layers(params)
    if x.ndim != 2 or x.shape[1] != params["layers.0.weight"].shape[0]:
        raise ShapeError(f"input shape {x.shape} does not fit the first layer")
    batch = x.shape[0]
    zs, acts = [], [x]
    h = x
    for i in range(n):
        z = h @ params[f"layers.{i}.weight"] + params[f"layers.{i}.bias"].T
        zs.append(z)
        h = _act(z, activation) if i < n - 1 else z
        acts.append(h)
    if y.shape != h.shape:
        raise ShapeError(f"target shape {y.shape} does not match output {h.shape}")
    err = h - y
    loss = float(np.sum(err * err)) / batch

    grads = {}
    delta = 2.0 * err / batch
    for i in reversed(range(n)):
        grads[f"layers.{i}.weight"] = acts[i].T @ delta
        grads[f"layers.{i}.bias"] = delta.sum(axis=0).reshape(-1, 1)
        if i > 0:
            back = delta @ params[f"layers.{i}.weight"].T
            delta = back * _act_grad(zs[i - 1], acts[i], activation)
    return loss, grads


@dataclass(frozen=True)
class TeacherStudentTask:
    """Regress a frozen random teacher network with a student network.

    Training batches are drawn from ``(data_seed, run_seed, step)``; the
    held-out batch comes from a separate stream keyed by ``data_seed`` only,
    so every run of a comparison is evaluated on the same points.
    """

    teacher: MlpSpec = MlpSpec((4, 16, 16, 4), init_seed=10_000, init_scale=1.0)
    student_dims: tuple[int, ...] = (4, 16, 16, 4)
    batch_size: int = 32
    eval_size: int = 512
    data_seed: int = 0

    def __post_init__(self):
        if self.student_dims[0] != self.teacher.layer_dims[0] or \
                self.student_dims[-1] != self.teacher.layer_dims[-1]:
            raise ValueError("student and teacher must share input and output sizes")
        if self.batch_size < 1 or self.eval_size < 1:
            raise ValueError("batch sizes must be positive")

    @property
    def input_dim(self) -> int:
        return self.teacher.layer_dims[0]

    def student(self, seed: int) -> MlpSpec:
        return MlpSpec(self.student_dims, self.teacher.activation, init_seed=seed)

    def _targets(self, x):
        return forward(self._teacher_params, x, self.teacher.activation)

    @property
    def _teacher_params(self):
        return self.teacher.init_params()

    def batch(self, run_seed: int, step: int) -> tuple[np.ndarray, np.ndarray]:
        rng = np.random.default_rng([self.data_seed, 1, run_seed, step])
        x = rng.standard_normal((self.batch_size, self.input_dim))
        return x, self._targets(x)

    def eval_batch(self) -> tuple[np.ndarray, np.ndarray]:
        rng = np.random.default_rng([self.data_seed, 2])
        x = rng.standard_normal((self.eval_size, self.input_dim))
        return x, self._targets(x)


DIVERGENCE_LOSS = 1e6


def train(task: TeacherStudentTask, algorithm: str, cfg: OptimizerConfig, steps: int,
          eval_every: int = 100, seed: int = 0) -> list[RunRecord]:
    """Train a fresh student and return one record per step.

    Held-out loss is filled in every ``eval_every`` steps and at the final
    step. A non-finite or exploding loss ends the run with status
    ``"diverged"``.
    """
    return train_with_state(task, algorithm, cfg, steps, eval_every, seed)[0]


def train_with_state(task: TeacherStudentTask, algorithm: str, cfg: OptimizerConfig, steps: int,
                     eval_every: int = 100, seed: int = 0) -> tuple[list[RunRecord], Optimizer]:
    spec = task.student(seed)
    opt = Optimizer(algorithm, spec.init_params(), cfg)
    if opt.orthogonal:
        tracked = [n for n, g in opt.groups.items() if g.kind is ParamKind.MATRIX]
    elif algorithm == "adamw_acc":
        tracked = list(opt.groups)
    else:
        tracked = []
    tracker = LemmaTracker(cfg.accel_alpha if algorithm != "muon" else 0.0, cfg.momentum) \
        if tracked else None
    xe, ye = task.eval_batch()
    records = []
    for k in range(1, steps + 1):
        x, y = task.batch(seed, k)
        t0 = time.perf_counter_ns()
        loss, grads = forward_backward(opt.weights(), x, y, spec.activation)
        if not np.isfinite(loss) or loss > DIVERGENCE_LOSS:
            records.append(RunRecord(step=k, train_loss=loss, status="diverged"))
            break
        t1 = time.perf_counter_ns()
        traces = opt.step(grads)
        t2 = time.perf_counter_ns()
        row = summarize_traces(traces, tracked, tracker)
        fallback_ok = all(traces[n].fallback == (opt.orthogonal and g.kind is ParamKind.VECTOR)
                          for n, g in opt.groups.items())
        rec = RunRecord(step=k, train_loss=loss, fallback_ok=fallback_ok,
                        inner_ns=t2 - t1, iter_ns=t2 - t0, **row)
        if k % eval_every == 0 or k == steps:
            rec.eval_loss = forward_backward(opt.weights(), xe, ye, spec.activation)[0]
        records.append(rec)
    return records, opt


def final_eval_loss(records: list[RunRecord]) -> float:
    for rec in reversed(records):
        if rec.status != "ok":
            return float("inf")
        if np.isfinite(rec.eval_loss):
            return rec.eval_loss
    return float("nan")
