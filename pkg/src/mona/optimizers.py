"""MONA, Muon, MONA-Lite, AdamW and AdamW-Acc on numpy parameters.

Every step function works on one :class:`ParamGroup` and mutates its weights
and state in place, returning a :class:`StepTrace` with the norms the
analysis module checks. :class:`Optimizer` routes a dict of parameters to the
right step function.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from .matrixcore import as_matrix, bf16_decode, bf16_encode, frobenius_norm
from .orthogonalize import DEFAULT_NS, NsConfig, newton_schulz_flagged


class NonFiniteGradientError(ValueError):
    def __init__(self, name: str):
        super().__init__(f"non-finite gradient for parameter {name!r}; step rejected")
        self.name = name


class ParamKind(str, enum.Enum):
    MATRIX = "matrix"
    VECTOR = "vector"


class Precision(str, enum.Enum):
    FP32_BUFFERED = "fp32_buffered"
    FP32_STREAMING = "fp32_streaming"
    BF16_STREAMING = "bf16_streaming"

    @property
    def streaming(self) -> bool:
        return self is not Precision.FP32_BUFFERED


ALGORITHMS = ("mona", "muon", "mona_lite", "adamw", "adamw_acc")


def default_alpha(beta_a: float) -> float:
    """Acceleration coefficient tied to the EMA decay: ``-1 / (2 (1 - beta_a))``."""
    if not 0.0 <= beta_a < 1.0:
        raise ValueError(f"beta_a must lie in [0, 1), got {beta_a}")
    return -1.0 / (2.0 * (1.0 - beta_a))


@dataclass(frozen=True)
class AdamConfig:
    beta1: float = 0.9
    beta2: float = 0.95
    eps: float = 1e-8
    weight_decay: float = 0.0

    def __post_init__(self):
        for label, b in (("beta1", self.beta1), ("beta2", self.beta2)):
            if not 0.0 <= b < 1.0:
                raise ValueError(f"{label} must lie in [0, 1), got {b}")
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if self.weight_decay < 0:
            raise ValueError(f"weight_decay must be non-negative, got {self.weight_decay}")


SCHEDULES = ("constant", "inverse_sqrt")


@dataclass(frozen=True)
class OptimizerConfig:
    """Hyperparameters shared by the optimizer family.

    ``accel_alpha=None`` resolves to :func:`default_alpha` of ``accel_beta``.
    ``gamma=None`` selects the RMS-matching scale ``0.2 * sqrt(max(m, n))``;
    a number fixes it. For the AdamW baselines ``learning_rate`` is the Adam
    step size; for Muon/MONA the vector fallback uses ``fallback_lr``.

    ``schedule="inverse_sqrt"`` multiplies both step sizes by
    ``min(1, sqrt(schedule_warmup / k))`` at optimizer step ``k``.
    """

    learning_rate: float = 0.02
    momentum: float = 0.95
    accel_beta: float = 0.99
    accel_alpha: float | None = None
    weight_decay: float = 0.1
    ns: NsConfig = DEFAULT_NS
    gamma: float | None = None
    precision: Precision = Precision.FP32_BUFFERED
    adam: AdamConfig = AdamConfig()
    fallback_lr: float = 1e-3
    schedule: str = "constant"
    schedule_warmup: int = 1

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ValueError(f"learning_rate must be non-negative, got {self.learning_rate}")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError(f"momentum must lie in [0, 1), got {self.momentum}")
        if not 0.0 <= self.accel_beta < 1.0:
            raise ValueError(f"accel_beta must lie in [0, 1), got {self.accel_beta}")
        if self.accel_alpha is None:
            object.__setattr__(self, "accel_alpha", default_alpha(self.accel_beta))
        limit = 1.0 / (1.0 - self.accel_beta)
        if not abs(self.accel_alpha) < limit:
            raise ValueError(
                f"|accel_alpha| must be < 1/(1-accel_beta) = {limit:g}, got {self.accel_alpha}"
            )
        if self.weight_decay < 0:
            raise ValueError(f"weight_decay must be non-negative, got {self.weight_decay}")
        if self.gamma is not None and not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.schedule not in SCHEDULES:
            raise ValueError(f"schedule must be one of {SCHEDULES}, got {self.schedule!r}")
        if not self.schedule_warmup >= 1:
            raise ValueError("schedule_warmup must be at least 1")
        if not self.fallback_lr >= 0:
            raise ValueError(f"fallback_lr must be non-negative, got {self.fallback_lr}")
        object.__setattr__(self, "precision", Precision(self.precision))

    def lr_scale(self, step: int) -> float:
        if self.schedule == "constant" or step <= self.schedule_warmup:
            return 1.0
        return float(np.sqrt(self.schedule_warmup / step))

    def at_step(self, step: int) -> "OptimizerConfig":
        """This config with both step sizes scaled for 1-based ``step``."""
        scale = self.lr_scale(step)
        if scale == 1.0:
            return self
        return replace(self, learning_rate=self.learning_rate * scale,
                       fallback_lr=self.fallback_lr * scale, schedule="constant")

    def gamma_for(self, shape: tuple[int, int]) -> float:
        if self.gamma is not None:
            return float(self.gamma)
        return 0.2 * float(np.sqrt(max(shape)))

    def with_(self, **changes) -> "OptimizerConfig":
        return replace(self, **changes)


VECTOR_NAME_PATTERNS = ("embed", "head")


def classify_param(name: str, shape, vector_patterns=VECTOR_NAME_PATTERNS) -> ParamKind:
    """Matrix parameters get orthogonalized updates, everything else AdamW.

    Names containing any of ``vector_patterns`` are forced onto the vector
    route (embeddings and output heads, by Muon convention).
    """
    shape = tuple(shape)
    lowered = name.lower()
    if any(p in lowered for p in vector_patterns):
        return ParamKind.VECTOR
    if len(shape) == 2 and shape[0] > 1 and shape[1] > 1:
        return ParamKind.MATRIX
    return ParamKind.VECTOR


@dataclass
class ParamGroup:
    """One named parameter, its optimizer state, and its step counter.

    Acceleration buffers live in ``state`` with a storage dtype set by the
    precision mode (float32 arrays, or uint16 bfloat16 patterns). In
    streaming modes the previous gradient is kept in ``grad_slot``, which
    models the gradient buffer itself and is not optimizer state.
    """

    name: str
    weights: np.ndarray
    kind: ParamKind | None = None
    state: dict[str, np.ndarray] = field(default_factory=dict)
    grad_slot: np.ndarray | None = None
    step: int = 0

    def __post_init__(self):
        self.weights = as_matrix(self.weights, self.name).copy()
        if self.kind is None:
            self.kind = classify_param(self.name, self.weights.shape)
        self.kind = ParamKind(self.kind)

    @property
    def shape(self) -> tuple[int, int]:
        return self.weights.shape

    def buffer(self, key: str) -> np.ndarray:
        """State buffer ``key`` decoded to float64 (zeros when absent)."""
        buf = self.state.get(key)
        if buf is None:
            return np.zeros(self.shape)
        if buf.dtype == np.uint16:
            return bf16_decode(buf)
        return buf.astype(np.float64)

    def auxiliary_bytes(self) -> int:
        """Bytes held by the acceleration state (``accel`` and ``grad_prev``)."""
        return sum(self.state[k].nbytes for k in ("accel", "grad_prev") if k in self.state)

    def copy(self) -> "ParamGroup":
        return ParamGroup(
            name=self.name,
            weights=self.weights.copy(),
            kind=self.kind,
            state={k: v.copy() for k, v in self.state.items()},
            grad_slot=None if self.grad_slot is None else self.grad_slot.copy(),
            step=self.step,
        )


@dataclass
class StepTrace:
    name: str = ""
    grad_norm: float = 0.0
    diff_norm: float = float("nan")
    accel_norm: float = float("nan")
    mixed_norm: float = float("nan")
    momentum_norm: float = float("nan")
    update_norm: float = 0.0
    degenerate: bool = False
    fallback: bool = False
    inner_ns: int = 0
    direction: np.ndarray | None = field(default=None, repr=False)


def _check_grad(group: ParamGroup, grad) -> np.ndarray:
    grad = np.asarray(grad, dtype=np.float64)
    if grad.ndim == 1:
        grad = grad.reshape(-1, 1)
    if grad.shape != group.shape:
        raise ValueError(f"gradient shape {grad.shape} does not match {group.name!r} {group.shape}")
    if not np.all(np.isfinite(grad)):
        raise NonFiniteGradientError(group.name)
    return grad


def _store(values: np.ndarray, precision: Precision) -> np.ndarray:
    if precision is Precision.BF16_STREAMING:
        return bf16_encode(values)
    return values.astype(np.float32)


def _widen(stored: np.ndarray) -> np.ndarray:
    """A new float64 array holding the decoded buffer."""
    return bf16_decode(stored) if stored.dtype == np.uint16 else stored.astype(np.float64)


def _accelerate(group: ParamGroup, grad: np.ndarray, beta: float, alpha: float,
                precision: Precision) -> tuple[float, np.ndarray, np.ndarray]:
    """Gradient difference, acceleration EMA and mixed gradient.

    Buffered mode keeps ``grad_prev`` in state; streaming modes read the
    gradient slot, then overwrite it with ``grad``. Returns
    ``(||diff||, accel, mixed)``; ``accel`` is the freshly computed float64
    value, the stored copy is rounded to the precision mode.
    """
    # float64 arithmetic throughout; stored buffers are widened into fresh
    # arrays that are then updated in place, and one scratch array holds diff
    # and then mixed
    prev = group.grad_slot if precision.streaming else group.state.get("grad_prev")
    if prev is None:
        scratch = grad.copy()
    else:
        scratch = _widen(prev)
        np.subtract(grad, scratch, out=scratch)
    diff_norm = frobenius_norm(scratch)
    scratch *= 1.0 - beta
    stored = group.state.get("accel")
    if stored is None:
        accel = scratch.copy()
    else:
        accel = _widen(stored)
        accel *= beta
        accel += scratch
    if alpha == 0.0:
        mixed = grad
    else:
        mixed = np.multiply(accel, alpha, out=scratch)
        mixed += grad

    group.state["accel"] = _store(accel, precision)
    if precision.streaming:
        group.grad_slot = _store(grad, precision)
        group.state.pop("grad_prev", None)
    else:
        group.state["grad_prev"] = _store(grad, precision)
    return diff_norm, accel, mixed


def _orthogonal_update(group: ParamGroup, mixed: np.ndarray, cfg: OptimizerConfig,
                       trace: StepTrace) -> None:
    momentum = cfg.momentum * group.state.get("momentum", np.zeros(group.shape)) + mixed
    group.state["momentum"] = momentum
    direction, degenerate = newton_schulz_flagged(momentum, cfg.ns)
    gamma = cfg.gamma_for(group.shape)
    update = cfg.learning_rate * (gamma * direction + cfg.weight_decay * group.weights)
    group.weights -= update
    group.step += 1
    trace.momentum_norm = frobenius_norm(momentum)
    trace.update_norm = frobenius_norm(update)
    trace.degenerate = degenerate
    trace.direction = direction


def _require_matrix(group: ParamGroup) -> None:
    if group.kind is not ParamKind.MATRIX:
        raise ValueError(f"{group.name!r} is a vector parameter; use the AdamW fallback")


def muon_step(group: ParamGroup, grad, cfg: OptimizerConfig) -> StepTrace:
    """``M <- mu M + G``, ``O = NS(M)``, ``W <- W - lr (gamma O + wd W)``."""
    t0 = time.perf_counter_ns()
    _require_matrix(group)
    grad = _check_grad(group, grad)
    trace = StepTrace(name=group.name, grad_norm=frobenius_norm(grad))
    _orthogonal_update(group, grad, cfg, trace)
    trace.inner_ns = time.perf_counter_ns() - t0
    return trace


def mona_step(group: ParamGroup, grad, cfg: OptimizerConfig) -> StepTrace:
    """One MONA update on a matrix parameter.

    The acceleration EMA of gradient differences is mixed into the gradient
    before momentum accumulation; the momentum is then orthogonalized
    exactly as in Muon. State starts from zeros, so the first difference is
    the first gradient itself. Streaming precision modes are handled by
    :func:`mona_lite_step`.
    """
    if cfg.precision.streaming:
        return mona_lite_step(group, grad, cfg)
    return _mona(group, grad, cfg)


def mona_lite_step(group: ParamGroup, grad, cfg: OptimizerConfig) -> StepTrace:
    if not cfg.precision.streaming:
        raise ValueError(f"mona_lite_step needs a streaming precision mode, got {cfg.precision.value}")
    return _mona(group, grad, cfg)


def _mona(group: ParamGroup, grad, cfg: OptimizerConfig) -> StepTrace:
    t0 = time.perf_counter_ns()
    _require_matrix(group)
    grad = _check_grad(group, grad)
    trace = StepTrace(name=group.name, grad_norm=frobenius_norm(grad))
    trace.diff_norm, accel, mixed = _accelerate(group, grad, cfg.accel_beta, cfg.accel_alpha,
                                                cfg.precision)
    trace.accel_norm = frobenius_norm(accel)
    trace.mixed_norm = frobenius_norm(mixed)
    _orthogonal_update(group, mixed, cfg, trace)
    trace.inner_ns = time.perf_counter_ns() - t0
    return trace


def _adam_update(group: ParamGroup, g: np.ndarray, acfg: AdamConfig, lr: float,
                 trace: StepTrace) -> None:
    group.step += 1
    k = group.step
    m = acfg.beta1 * group.state.get("adam_m", np.zeros(group.shape)) + (1.0 - acfg.beta1) * g
    v = acfg.beta2 * group.state.get("adam_v", np.zeros(group.shape)) + (1.0 - acfg.beta2) * (g * g)
    group.state["adam_m"] = m
    group.state["adam_v"] = v
    m_hat = m / (1.0 - acfg.beta1**k)
    v_hat = v / (1.0 - acfg.beta2**k)
    before = group.weights.copy()
    group.weights *= 1.0 - lr * acfg.weight_decay
    group.weights -= lr * m_hat / (np.sqrt(v_hat) + acfg.eps)
    trace.update_norm = frobenius_norm(before - group.weights)


def adamw_step(group: ParamGroup, grad, acfg: AdamConfig, lr: float) -> StepTrace:
    """Adam with bias correction and decoupled weight decay."""
    t0 = time.perf_counter_ns()
    grad = _check_grad(group, grad)
    trace = StepTrace(name=group.name, grad_norm=frobenius_norm(grad))
    _adam_update(group, grad, acfg, lr, trace)
    trace.inner_ns = time.perf_counter_ns() - t0
    return trace


def adamw_acc_step(group: ParamGroup, grad, acfg: AdamConfig, accel: tuple[float, float],
                   lr: float) -> StepTrace:
    """AdamW fed with the acceleration-mixed gradient instead of the raw one."""
    t0 = time.perf_counter_ns()
    grad = _check_grad(group, grad)
    beta_a, alpha = accel
    trace = StepTrace(name=group.name, grad_norm=frobenius_norm(grad))
    trace.diff_norm, acc, mixed = _accelerate(group, grad, beta_a, alpha, Precision.FP32_BUFFERED)
    trace.accel_norm = frobenius_norm(acc)
    trace.mixed_norm = frobenius_norm(mixed)
    _adam_update(group, mixed, acfg, lr, trace)
    trace.inner_ns = time.perf_counter_ns() - t0
    return trace


class Optimizer:
    """A named algorithm applied to a set of parameter groups.

    Muon, MONA and MONA-Lite update matrix parameters with their own rule
    and send vector parameters through AdamW (``cfg.fallback_lr``, weight
    decay 0 unless ``cfg.adam`` says otherwise). AdamW and AdamW-Acc treat
    every parameter alike.
    """

    def __init__(self, algorithm: str, params: Mapping[str, np.ndarray] | list[ParamGroup],
                 cfg: OptimizerConfig | None = None):
        if algorithm not in ALGORITHMS:
            raise ValueError(f"unknown optimizer {algorithm!r}; expected one of {ALGORITHMS}")
        self.algorithm = algorithm
        self.cfg = cfg or OptimizerConfig()
        if algorithm == "mona_lite" and not self.cfg.precision.streaming:
            self.cfg = self.cfg.with_(precision=Precision.BF16_STREAMING)
        if algorithm == "mona" and self.cfg.precision.streaming:
            self.algorithm = "mona_lite"
        if isinstance(params, Mapping):
            groups = [ParamGroup(name, w) for name, w in params.items()]
        else:
            groups = list(params)
        self.groups: dict[str, ParamGroup] = {g.name: g for g in groups}
        self.steps_taken = 0

    @property
    def orthogonal(self) -> bool:
        return self.algorithm in ("mona", "muon", "mona_lite")

    def step_group(self, group: ParamGroup, grad, cfg: OptimizerConfig | None = None) -> StepTrace:
        cfg = cfg or self.cfg
        if self.orthogonal and group.kind is ParamKind.MATRIX:
            if self.algorithm == "muon":
                return muon_step(group, grad, cfg)
            return mona_step(group, grad, cfg)
        if self.orthogonal:
            trace = adamw_step(group, grad, cfg.adam, cfg.fallback_lr)
            trace.fallback = True
            return trace
        if self.algorithm == "adamw":
            return adamw_step(group, grad, cfg.adam, cfg.learning_rate)
        return adamw_acc_step(group, grad, cfg.adam, (cfg.accel_beta, cfg.accel_alpha),
                              cfg.learning_rate)

    def step(self, grads: Mapping[str, np.ndarray]) -> dict[str, StepTrace]:
        # validate everything first so a bad gradient leaves all state untouched
        checked = {name: _check_grad(self.groups[name], g) for name, g in grads.items()}
        self.steps_taken += 1
        cfg = self.cfg.at_step(self.steps_taken)
        return {name: self.step_group(self.groups[name], g, cfg) for name, g in checked.items()}

    def weights(self) -> dict[str, np.ndarray]:
        return {name: g.weights for name, g in self.groups.items()}

    def auxiliary_bytes(self) -> int:
        return sum(g.auxiliary_bytes() for g in self.groups.values())
