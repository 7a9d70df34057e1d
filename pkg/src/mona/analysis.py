"""Executable checks for the acceleration/momentum bounds, the non-convex
convergence bound, and the curvature scaling of the acceleration buffer.

Runs on landscapes with exact gradients are driven by :func:`run_landscape`,
which records per-step alignment between the true gradient and the
orthogonalized direction alongside the usual :class:`RunRecord` rows.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .landscapes import QuadraticLandscape, StochasticGradientOracle
from .optimizers import OptimizerConfig, ParamGroup, ParamKind, mona_step, muon_step
from .records import LemmaTracker, RunRecord, summarize_traces

PASS, FAIL, SKIPPED = "pass", "fail", "skipped"


@dataclass
class CheckResult:
    name: str
    status: str
    numbers: dict = field(default_factory=dict)
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.status != FAIL

    def line(self) -> str:
        nums = ", ".join(f"{k}={_fmt(v)}" for k, v in self.numbers.items())
        text = f"[{self.status.upper():7}] {self.name}"
        if nums:
            text += f": {nums}"
        if self.detail:
            text += f" ({self.detail})"
        return text


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def report_json(results: Iterable[CheckResult]) -> str:
    def clean(v):
        if isinstance(v, (np.floating, float)):
            v = float(v)
            return v if np.isfinite(v) else str(v)
        if isinstance(v, (np.integer,)):
            return int(v)
        if isinstance(v, (np.bool_,)):
            return bool(v)
        return v

    blocks = [{"name": r.name, "status": r.status,
               "numbers": {k: clean(v) for k, v in r.numbers.items()}, "detail": r.detail}
              for r in results]
    return json.dumps(blocks, indent=2, sort_keys=False) + "\n"


def report_text(results: Iterable[CheckResult]) -> str:
    return "".join(r.line() + "\n" for r in results)


# --- lemma bounds -----------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    step: int
    quantity: str
    value: float
    bound: float


@dataclass
class LemmaReport:
    violations: list[Violation]
    steps_checked: int

    @property
    def passed(self) -> bool:
        return not self.violations


def check_lemma_bounds(records: Iterable[RunRecord], cfg: OptimizerConfig | None = None, *,
                       alpha: float | None = None, momentum: float | None = None,
                       slack: float = 1e-9) -> LemmaReport:
    """Replay the acceleration and momentum bounds over a record stream.

    ``G_max`` is the running maximum of ``grad_norm``. Quantities recorded
    as NaN (not produced by the optimizer) are skipped. ``alpha`` and
    ``momentum`` override the config, e.g. ``alpha=0`` for plain Muon.
    """
    cfg = cfg or OptimizerConfig()
    alpha = cfg.accel_alpha if alpha is None else alpha
    momentum = cfg.momentum if momentum is None else momentum
    g_max = 0.0
    violations = []
    n = 0
    for rec in records:
        if rec.status != "ok" or not np.isfinite(rec.grad_norm):
            continue
        n += 1
        g_max = max(g_max, rec.grad_norm)
        g_bar = g_max * (1.0 + 2.0 * abs(alpha))
        for quantity, value, bound in (
            ("accel", rec.accel_norm, 2.0 * g_max),
            ("mixed", rec.mixed_norm, g_bar),
            ("momentum", rec.momentum_norm, g_bar / (1.0 - momentum)),
        ):
            if np.isfinite(value) and value > bound * (1.0 + slack):
                violations.append(Violation(rec.step, quantity, float(value), float(bound)))
    return LemmaReport(violations, n)


# --- instrumented landscape runs ---------------------------------------------

@dataclass
class LandscapeRun:
    algorithm: str
    cfg: OptimizerConfig
    records: list[RunRecord]
    losses: np.ndarray          # f(W_k) before step k
    grad_sq: np.ndarray         # ||grad f(W_k)||_F^2
    inner: np.ndarray           # <grad f(W_k), O_k>
    direction_sq: np.ndarray    # ||O_k||_F^2
    accel: np.ndarray | None    # A_k snapshots, shape (K, rows, cols)
    final: np.ndarray
    gamma: float

    @property
    def steps(self) -> int:
        return len(self.losses)


def run_landscape(landscape, oracle, algorithm: str, cfg: OptimizerConfig, steps: int,
                  w0: np.ndarray, keep_accel: bool = False) -> LandscapeRun:
    """Optimize ``w0`` on ``landscape`` with gradients drawn from ``oracle``.

    Only the orthogonalized family runs here (``"mona"``, ``"mona_lite"``
    via a streaming precision, or ``"muon"``); the parameter is treated as
    a matrix regardless of its shape.
    """
    if algorithm not in ("mona", "muon", "mona_lite"):
        raise ValueError(f"run_landscape supports mona/muon only, got {algorithm!r}")
    group = ParamGroup("w", w0, kind=ParamKind.MATRIX)
    step_fn = muon_step if algorithm == "muon" else mona_step
    tracker = LemmaTracker(0.0 if algorithm == "muon" else cfg.accel_alpha, cfg.momentum)
    losses, grad_sq, inner, dir_sq, accel, records = [], [], [], [], [], []
    for k in range(steps):
        loss, true_grad = landscape.loss_and_grad(group.weights)
        grad = oracle(group.weights, k)
        trace = step_fn(group, grad, cfg)
        o = trace.direction
        losses.append(loss)
        grad_sq.append(float(np.sum(true_grad * true_grad)))
        inner.append(float(np.sum(true_grad * o)))
        dir_sq.append(float(np.sum(o * o)))
        if keep_accel:
            accel.append(group.buffer("accel"))
        row = summarize_traces({"w": trace}, ["w"], tracker)
        records.append(RunRecord(step=k + 1, train_loss=loss, inner_ns=trace.inner_ns, **row))
    return LandscapeRun(
        algorithm=algorithm, cfg=cfg, records=records,
        losses=np.array(losses), grad_sq=np.array(grad_sq), inner=np.array(inner),
        direction_sq=np.array(dir_sq), accel=np.array(accel) if keep_accel else None,
        final=group.weights.copy(), gamma=cfg.gamma_for(group.shape),
    )


# --- alignment and the convergence bound -------------------------------------

@dataclass(frozen=True)
class AlignmentEstimate:
    rho: float
    positive_fraction: float
    steps_used: int


def estimate_alignment(run: LandscapeRun, burn_in: int = 10, tol: float = 1e-10) -> AlignmentEstimate:
    """Smallest observed ``<grad f, O> / ||grad f||^2`` after ``burn_in`` steps.

    Steps whose squared gradient norm is below ``tol`` are ignored. This is
    a measurement; a non-positive result is reported, not raised.
    """
    g2 = run.grad_sq[burn_in:]
    ip = run.inner[burn_in:]
    keep = g2 >= tol
    if not keep.any():
        return AlignmentEstimate(float("nan"), float("nan"), 0)
    ratio = ip[keep] / g2[keep]
    return AlignmentEstimate(float(ratio.min()), float(np.mean(ip[keep] > 0)), int(keep.sum()))


@dataclass(frozen=True)
class BoundEstimate:
    L: float
    rho: float
    g_max: float
    c_m: float
    rank: int
    gamma: float
    alpha: float
    momentum: float

    @property
    def g_bar(self) -> float:
        return self.g_max * (1.0 + 2.0 * abs(self.alpha))

    @property
    def c1(self) -> float:
        # defined alongside the others but absent from the final bound
        return self.g_bar / (1.0 - self.momentum)

    @property
    def c2(self) -> float:
        return self.L * self.gamma**2 * self.c_m / 2.0

    @property
    def c3(self) -> float:
        return self.rho * self.gamma

    @property
    def c4(self) -> float:
        return self.gamma**2 * self.c_m / 2.0

    def eta_limit(self) -> float:
        return min(1.0 / self.L, self.c3 / self.c2)

    def rhs(self, f_gap: float, eta: float, steps: int) -> float:
        return f_gap / (eta * self.c3 * steps) + eta * self.L * self.c4 / self.c3


def theorem1_rhs(f_gap: float, eta: float, steps: int, L: float, rho: float, gamma: float,
                 c_m: float) -> float:
    return BoundEstimate(L, rho, 0.0, c_m, 0, gamma, 0.0, 0.0).rhs(f_gap, eta, steps)


@dataclass
class Theorem1Report:
    status: str
    lhs: float
    rhs: float
    eta: float
    eta_limit: float
    bound: BoundEstimate | None
    reason: str = ""


def check_theorem1(run: LandscapeRun, landscape: QuadraticLandscape,
                   burn_in: int = 0) -> Theorem1Report:
    """Compare the average squared gradient norm against the convergence bound.

    The smoothness constant is the largest Hessian eigenvalue; the alignment
    constant is measured on this run (burn-in 0 by default, so every step
    of the average is covered by it). ``C_m`` is the largest observed
    ``||O_k||^2`` or ``min(m, n)``, whichever is larger.
    """
    eta = run.cfg.learning_rate
    shape = landscape.shape
    rank = min(shape)
    align = estimate_alignment(run, burn_in=burn_in)
    g_max = max(r.grad_norm for r in run.records)
    lhs = float(run.grad_sq.mean())
    if not align.rho > 0:
        return Theorem1Report(SKIPPED, lhs, float("nan"), eta, float("nan"), None,
                              f"measured alignment {align.rho:.3g} is not positive")
    alpha = 0.0 if run.algorithm == "muon" else run.cfg.accel_alpha
    bound = BoundEstimate(
        L=landscape.smoothness, rho=align.rho, g_max=g_max,
        c_m=max(float(run.direction_sq.max()), float(rank)), rank=rank,
        gamma=run.gamma, alpha=alpha, momentum=run.cfg.momentum,
    )
    limit = bound.eta_limit()
    f_gap = float(run.losses[0]) - landscape.min_value
    rhs = bound.rhs(f_gap, eta, run.steps)
    if eta > limit:
        return Theorem1Report(SKIPPED, lhs, rhs, eta, limit, bound,
                              f"step size {eta:g} exceeds the admissible {limit:.3g}")
    status = PASS if lhs <= rhs else FAIL
    return Theorem1Report(status, lhs, rhs, eta, limit, bound)


@dataclass(frozen=True)
class RateReport:
    steps: tuple[int, int]
    avg_grad_sq: tuple[float, float]
    ratio: float
    required: float = 1.0 / 1.3

    @property
    def passed(self) -> bool:
        return self.ratio <= self.required


def rate_probe(landscape, oracle, cfg: OptimizerConfig, w0: np.ndarray,
               steps=(2500, 10_000), eta_scale: float = 1.0, algorithm: str = "mona") -> RateReport:
    """Average squared gradient norm with ``eta = eta_scale / sqrt(K)`` at two horizons."""
    avgs = []
    for k in steps:
        run = run_landscape(landscape, oracle, algorithm,
                            cfg.with_(learning_rate=eta_scale / np.sqrt(k)), k, w0)
        avgs.append(float(run.grad_sq.mean()))
    return RateReport(tuple(steps), tuple(avgs), avgs[1] / avgs[0])


# --- curvature scaling of the acceleration -------------------------------------

@dataclass(frozen=True)
class DirectionStat:
    eigs: np.ndarray
    mean_abs: np.ndarray     # time-averaged |Q^T vec(A_k)| per eigendirection
    ratio: float             # sharpest / flattest eigenvalue group


def escape_direction_stat(accel: np.ndarray, landscape: QuadraticLandscape) -> DirectionStat:
    """Per-eigendirection mean of ``|A_k|`` and the sharp-to-flat ratio.

    Directions sharing the largest eigenvalue are averaged into the
    numerator and those sharing the smallest into the denominator, so an
    isotropic Hessian gives exactly 1.
    """
    coords = np.abs(np.asarray(accel).reshape(len(accel), -1) @ landscape.basis)
    mean_abs = coords.mean(axis=0)
    eigs = landscape.eigs
    sharp = np.isclose(eigs, eigs.max(), rtol=1e-12)
    flat = np.isclose(eigs, eigs.min(), rtol=1e-12)
    ratio = float(mean_abs[sharp].mean() / mean_abs[flat].mean())
    return DirectionStat(eigs.copy(), mean_abs, ratio)
