"""Named verification checks on fresh fixture runs.

Each ``check_*`` function builds its own fixture, runs it, and returns a
:class:`~mona.analysis.CheckResult`. Sizes default to the full protocol;
:func:`run_suite` can shrink them for a quick pass. ``ns`` and ``alpha``
let callers run the whole suite against a mutated build.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass

import numpy as np

from . import analysis
from .analysis import FAIL, PASS, SKIPPED, CheckResult
from .landscapes import (DoubleWellLandscape, QuadraticLandscape, StochasticGradientOracle,
                         escape_experiment)
from .optimizers import OptimizerConfig, ParamGroup, ParamKind, Precision, mona_step, muon_step
from .orthogonalize import DEFAULT_NS, NsConfig, newton_schulz
from .toynet import MlpSpec, TeacherStudentTask, final_eval_loss, forward_backward, train


def _cfg(ns: NsConfig, alpha: float | None, **kw) -> OptimizerConfig:
    cfg = OptimizerConfig(ns=ns, **kw)
    return cfg if alpha is None else cfg.with_(accel_alpha=alpha)


def _same_bits(a: np.ndarray, b: np.ndarray) -> bool:
    return a.shape == b.shape and a.tobytes() == b.tobytes()


# --- fixtures ----------------------------------------------------------------

@dataclass(frozen=True)
class QuadraticFixture:
    eigs: tuple[float, ...]
    shape: tuple[int, int]
    noise_sigma: float
    learning_rate: float
    steps: int

    def landscape(self) -> QuadraticLandscape:
        return QuadraticLandscape.diagonal(self.eigs, self.shape)

    def oracle(self, seed: int) -> StochasticGradientOracle:
        return StochasticGradientOracle(self.landscape(), self.noise_sigma, np.inf, seed)


# diag(4, 1) Hessian on the rows of a 2x2 parameter
THEOREM = QuadraticFixture((4.0, 4.0, 1.0, 1.0), (2, 2), 0.1, 1e-3, 10_000)
THEOREM_W0 = np.array([[3.0, 0.9], [-1.5, 3.0]])
RATE_STEPS = (2500, 10_000)

PROP1 = QuadraticFixture((100.0, 100.0, 1.0, 1.0), (2, 2), 0.01, 1e-3, 2000)

LITE = QuadraticFixture((4.0, 4.0, 1.0, 1.0), (2, 2), 0.1, 1e-2, 1000)


@dataclass(frozen=True)
class EscapeFixture:
    sharp_width: float = 0.25
    flat_width: float = 2.0
    separation: float = 4.0
    noise_sigma: float = 0.7
    learning_rate: float = 0.45
    steps: int = 500
    jitter: float = 0.05

    def landscape(self) -> DoubleWellLandscape:
        flat = np.zeros((2, 2))
        flat[0, 0] = self.separation
        return DoubleWellLandscape(np.zeros((2, 2)), flat, 1.0, 1.0, self.sharp_width, self.flat_width)

    def oracle(self) -> StochasticGradientOracle:
        return StochasticGradientOracle(self.landscape(), self.noise_sigma)


ESCAPE = EscapeFixture()


@dataclass(frozen=True)
class OrderingFixture:
    steps: int = 5000
    ortho_lr: float = 0.02
    adam_lr: float = 0.003
    weight_decay: float = 0.1
    schedule: str = "inverse_sqrt"
    schedule_warmup: int = 500

    def config(self, algorithm: str, ns: NsConfig = DEFAULT_NS, alpha: float | None = None) -> OptimizerConfig:
        lr = self.adam_lr if algorithm.startswith("adamw") else self.ortho_lr
        return _cfg(ns, alpha, learning_rate=lr, weight_decay=self.weight_decay,
                    fallback_lr=self.adam_lr, schedule=self.schedule,
                    schedule_warmup=self.schedule_warmup)


ORDERING = OrderingFixture()


# --- 1. reduction identity ------------------------------------------------------

def random_group_pair(rng: np.random.Generator) -> tuple[ParamGroup, ParamGroup]:
    """Two identical matrix groups carrying random prior optimizer state."""
    m, n = (int(v) for v in rng.integers(1, 9, size=2))
    w = rng.standard_normal((m, n))
    state = {"momentum": rng.standard_normal((m, n)),
             "accel": rng.standard_normal((m, n)).astype(np.float32),
             "grad_prev": rng.standard_normal((m, n)).astype(np.float32)}
    a = ParamGroup("p", w, kind=ParamKind.MATRIX, state=state, step=int(rng.integers(0, 50)))
    return a, a.copy()


def check_reduction(fixtures: int = 100, steps: int = 20, seed: int = 0,
                    ns: NsConfig = DEFAULT_NS) -> CheckResult:
    rng = np.random.default_rng(seed)
    mismatches = 0
    for _ in range(fixtures):
        a, b = random_group_pair(rng)
        cfg = OptimizerConfig(ns=ns, accel_alpha=0.0,
                              learning_rate=float(rng.uniform(1e-3, 0.1)),
                              momentum=float(rng.uniform(0, 0.99)),
                              accel_beta=float(rng.uniform(0, 0.99)),
                              weight_decay=float(rng.uniform(0, 0.2)))
        for _ in range(steps):
            g = rng.standard_normal(a.shape) * float(rng.uniform(0.1, 10))
            mona_step(a, g, cfg)
            muon_step(b, g, cfg)
        mismatches += not _same_bits(a.weights, b.weights)
    status = PASS if mismatches == 0 else FAIL
    return CheckResult("reduction_identity", status,
                       {"fixtures": fixtures, "steps": steps, "mismatches": mismatches})


# --- 2. lemma bounds --------------------------------------------------------------

def check_lemmas(landscape_runs: int = 20, landscape_steps: int = 5000, net_steps: int = 1000,
                 ns: NsConfig = DEFAULT_NS, alpha: float | None = None) -> CheckResult:
    """Replay the acceleration/momentum bounds over many fixture runs."""
    total = 0
    violations = []
    rng = np.random.default_rng(2024)
    for i in range(landscape_runs):
        eigs = np.exp(rng.uniform(0, np.log(100), size=4))
        l = QuadraticLandscape.random((2, 2), eigs, seed=i)
        beta = float(rng.uniform(0.5, 0.995))
        cfg = OptimizerConfig(ns=ns, learning_rate=float(rng.uniform(1e-3, 5e-2)),
                              momentum=float(rng.uniform(0.5, 0.98)), accel_beta=beta,
                              weight_decay=0.0)
        if alpha is not None:
            cfg = cfg.with_(accel_alpha=alpha)
        algo = ("mona", "muon")[i % 2]
        oracle = StochasticGradientOracle(l, float(rng.uniform(0, 1)), float(rng.uniform(1, 20)), i)
        run = analysis.run_landscape(l, oracle, algo, cfg, landscape_steps,
                                     rng.standard_normal((2, 2)) * 3)
        a = 0.0 if algo == "muon" else cfg.accel_alpha
        rep = analysis.check_lemma_bounds(run.records, cfg, alpha=a)
        total += rep.steps_checked
        violations += rep.violations
    task = TeacherStudentTask()
    for algo in ("mona", "muon", "mona_lite", "adamw_acc"):
        cfg = _cfg(ns, alpha, weight_decay=0.1, learning_rate=0.003 if algo == "adamw_acc" else 0.02)
        records = train(task, algo, cfg, net_steps, eval_every=net_steps, seed=0)
        a = 0.0 if algo == "muon" else cfg.accel_alpha
        rep = analysis.check_lemma_bounds(records, cfg, alpha=a)
        total += rep.steps_checked
        violations += rep.violations
        violations += [analysis.Violation(r.step, "fallback", 0.0, 0.0)
                       for r in records if not r.fallback_ok]
    status = PASS if not violations else FAIL
    detail = "" if not violations else f"first: {violations[0]}"
    return CheckResult("lemma_bounds", status, {"steps": total, "violations": len(violations)}, detail)


# --- 3. Newton-Schulz band and subspace -------------------------------------------

def spectrum_fixture(rng: np.random.Generator, max_dim: int = 32, max_rank: int = 8,
                     low: float = 0.2, gap: float = 0.02):
    """Random matrix whose Frobenius-normalized nonzero singular values lie in
    ``[low, 1]`` with pairwise gaps of at least ``gap``."""
    while True:
        m, n = (int(v) for v in rng.integers(1, max_dim + 1, size=2))
        r = int(rng.integers(1, min(m, n, max_rank) + 1))
        s = np.sort(rng.uniform(0.3, 1.0, size=r))[::-1]
        s /= np.linalg.norm(s)
        if s.min() >= low and (r == 1 or np.min(-np.diff(s)) >= gap):
            break
    u, _ = np.linalg.qr(rng.standard_normal((m, r)))
    v, _ = np.linalg.qr(rng.standard_normal((n, r)))
    scale = float(np.exp(rng.uniform(-3, 3)))
    return scale * (u * s) @ v.T, u, v, s


def _max_angle(q1: np.ndarray, q2: np.ndarray) -> float:
    """Largest principal angle between two column spaces (sine form, accurate near 0)."""
    resid = q2 - q1 @ (q1.T @ q2)
    return float(np.arcsin(min(1.0, np.linalg.norm(resid, 2))))


def check_ns_band(matrices: int = 500, seed: int = 1, ns: NsConfig = DEFAULT_NS) -> CheckResult:
    rng = np.random.default_rng(seed)
    lo, hi, worst_angle = np.inf, -np.inf, 0.0
    for _ in range(matrices):
        m, u, v, s = spectrum_fixture(rng)
        out = newton_schulz(m, ns)
        r = len(s)
        uo, so, vto = np.linalg.svd(out)
        lo, hi = min(lo, so[:r].min()), max(hi, so[:r].max())
        worst_angle = max(worst_angle, _max_angle(u, uo[:, :r]), _max_angle(v, vto[:r].T))
    traj = float(newton_schulz(np.diag([0.5, 0.5]), ns)[0, 0])
    ok = 0.5 <= lo and hi <= 1.4 and worst_angle <= 1e-6 and abs(traj - 1.1085) <= 1e-3
    return CheckResult("ns_band", PASS if ok else FAIL,
                       {"matrices": matrices, "sigma_min": lo, "sigma_max": hi,
                        "max_angle": worst_angle, "diag_half_T5": traj})


# --- 4. convergence bound and rate --------------------------------------------------

def check_theorem1(ns: NsConfig = DEFAULT_NS, alpha: float | None = None,
                   steps: int = THEOREM.steps) -> CheckResult:
    l = THEOREM.landscape()
    cfg = _cfg(ns, alpha, learning_rate=THEOREM.learning_rate, weight_decay=0.0)
    run = analysis.run_landscape(l, THEOREM.oracle(0), "mona", cfg, steps, THEOREM_W0)
    rep = analysis.check_theorem1(run, l)
    nums = {"lhs": rep.lhs, "rhs": rep.rhs, "eta": rep.eta, "eta_limit": rep.eta_limit}
    if rep.bound is not None:
        nums["rho"] = rep.bound.rho
    return CheckResult("theorem1_bound", rep.status, nums, rep.reason)


def check_rate(ns: NsConfig = DEFAULT_NS, alpha: float | None = None,
               steps=RATE_STEPS) -> CheckResult:
    cfg = _cfg(ns, alpha, weight_decay=0.0)
    rep = analysis.rate_probe(THEOREM.landscape(), THEOREM.oracle(0), cfg, THEOREM_W0, steps)
    return CheckResult("rate_probe", PASS if rep.passed else FAIL,
                       {"K": steps[0], "K4": steps[1], "avg_K": rep.avg_grad_sq[0],
                        "avg_4K": rep.avg_grad_sq[1], "ratio": rep.ratio,
                        "required": rep.required})


# --- 5. curvature scaling of the acceleration --------------------------------------

def prop1_ratios(algorithm: str = "mona", seeds=range(10), steps: int = PROP1.steps,
                 ns: NsConfig = DEFAULT_NS, alpha: float | None = None) -> list[float]:
    """Sharp/flat ratio of the time-averaged acceleration per seed.

    ``"muon"`` runs MONA with ``alpha = 0``, which moves the weights exactly
    as Muon does while still tracking the acceleration buffer.
    """
    l = PROP1.landscape()
    if algorithm == "muon":
        algorithm, alpha = "mona", 0.0
    cfg = _cfg(ns, alpha, learning_rate=PROP1.learning_rate, weight_decay=0.0)
    ratios = []
    for seed in seeds:
        w0 = 0.1 * np.random.default_rng(100 + seed).standard_normal(l.shape)
        run = analysis.run_landscape(l, PROP1.oracle(seed), algorithm, cfg, steps, w0,
                                     keep_accel=True)
        ratios.append(analysis.escape_direction_stat(run.accel, l).ratio)
    return ratios


def check_prop1(seeds=range(10), ns: NsConfig = DEFAULT_NS, alpha: float | None = None) -> CheckResult:
    mona = prop1_ratios("mona", seeds, ns=ns, alpha=alpha)
    shadow = prop1_ratios("muon", seeds, ns=ns)
    everything = mona + shadow
    ok = all(25.0 <= r <= 400.0 for r in everything)
    return CheckResult("accel_curvature_ratio", PASS if ok else FAIL,
                       {"seeds": len(mona), "mona_min": min(mona), "mona_max": max(mona),
                        "muon_shadow_min": min(shadow), "muon_shadow_max": max(shadow)})


# --- 6. escape ------------------------------------------------------------------------

def escape_rates(fx: EscapeFixture = ESCAPE, seeds=range(50), ns: NsConfig = DEFAULT_NS,
                 alpha: float | None = None) -> dict[str, float]:
    l, o = fx.landscape(), fx.oracle()
    cfg = _cfg(ns, alpha, learning_rate=fx.learning_rate, weight_decay=0.0)
    out = {}
    for algo in ("mona", "muon"):
        for well in ("sharp", "flat"):
            out[f"{algo}_{well}"] = escape_experiment(cfg, l, o, seeds, fx.steps, algo, well, fx.jitter)
    return out


def check_escape(seeds=range(50), ns: NsConfig = DEFAULT_NS, alpha: float | None = None,
                 fx: EscapeFixture = ESCAPE) -> CheckResult:
    rates = escape_rates(fx, seeds, ns, alpha)
    l = fx.landscape()
    ok = (rates["mona_sharp"] >= rates["muon_sharp"]
          and rates["mona_flat"] <= 0.1 and rates["muon_flat"] <= 0.1)
    nums = {"seeds": len(list(seeds)), "curvature_ratio": l.sharp_curvature / l.flat_curvature, **rates}
    return CheckResult("escape_rate", PASS if ok else FAIL, nums)


def check_alpha_regime(ns: NsConfig = DEFAULT_NS, alpha: float | None = None) -> CheckResult:
    """Fail when the resolved acceleration coefficient is positive."""
    a = _cfg(ns, alpha).accel_alpha
    if a > 0:
        return CheckResult("alpha_regime", FAIL, {"alpha": a},
                           "positive alpha lies outside the analyzed regime")
    return CheckResult("alpha_regime", PASS, {"alpha": a})


# --- 7. optimizer ordering ---------------------------------------------------------------

ORDER = ("mona", "muon", "adamw_acc", "adamw")


def ordering_losses(fx: OrderingFixture = ORDERING, seeds=range(10), ns: NsConfig = DEFAULT_NS,
                    alpha: float | None = None, task: TeacherStudentTask | None = None) -> dict[str, list[float]]:
    task = task or TeacherStudentTask()
    return {algo: [final_eval_loss(train(task, algo, fx.config(algo, ns, alpha), fx.steps,
                                         eval_every=fx.steps, seed=s)) for s in seeds]
            for algo in ORDER}


def check_ordering(seeds=range(10), ns: NsConfig = DEFAULT_NS, alpha: float | None = None,
                   fx: OrderingFixture = ORDERING) -> CheckResult:
    losses = ordering_losses(fx, seeds, ns, alpha)
    mean = {k: float(np.mean(v)) for k, v in losses.items()}
    ok = mean["mona"] <= mean["muon"] and mean["adamw_acc"] <= mean["adamw"]
    cross = mean["muon"] <= mean["adamw_acc"]
    chain = " <= ".join(ORDER) if all(mean[a] <= mean[b] for a, b in zip(ORDER, ORDER[1:])) else \
        " ".join(f"{k}={mean[k]:.4g}" for k in sorted(mean, key=mean.get))
    return CheckResult("optimizer_ordering", PASS if ok else FAIL,
                       {**{f"mean_{k}": v for k, v in mean.items()}, "cross_family_holds": cross},
                       f"ranking: {chain}")


# --- 8. MONA-Lite ----------------------------------------------------------------------

def check_lite(sequences: int = 50, steps: int = 50, seeds=range(5), ns: NsConfig = DEFAULT_NS,
               alpha: float | None = None) -> CheckResult:
    rng = np.random.default_rng(8)
    mismatches = 0
    for _ in range(sequences):
        m, n = (int(v) for v in rng.integers(1, 9, size=2))
        w = rng.standard_normal((m, n))
        base = _cfg(ns, alpha, learning_rate=float(rng.uniform(1e-3, 0.1)))
        a = ParamGroup("p", w, kind=ParamKind.MATRIX)
        b = ParamGroup("p", w, kind=ParamKind.MATRIX)
        for _ in range(steps):
            g = rng.standard_normal((m, n))
            mona_step(a, g, base)
            mona_step(b, g, base.with_(precision=Precision.FP32_STREAMING))
        mismatches += not (_same_bits(a.weights, b.weights)
                           and _same_bits(a.state["accel"], b.state["accel"]))

    l = LITE.landscape()
    worst = 0.0
    for seed in seeds:
        err = {}
        for prec in (Precision.FP32_BUFFERED, Precision.BF16_STREAMING):
            cfg = _cfg(ns, alpha, learning_rate=LITE.learning_rate, weight_decay=0.0, precision=prec)
            g = ParamGroup("w", THEOREM_W0, kind=ParamKind.MATRIX)
            oracle = LITE.oracle(seed)
            for k in range(LITE.steps):
                mona_step(g, oracle(g.weights, k), cfg)
            err[prec] = float(np.linalg.norm(g.weights - l.target))
        worst = max(worst, abs(err[Precision.BF16_STREAMING] / err[Precision.FP32_BUFFERED] - 1.0))

    sizes = memory_accounting((1024, 1024))
    reduction = 1.0 - sizes["bf16_streaming"] / sizes["fp32_buffered"]
    ok = mismatches == 0 and worst <= 0.05 and reduction == 0.75
    return CheckResult("mona_lite", PASS if ok else FAIL,
                       {"stream_mismatches": mismatches, "bf16_rel_err_max": worst,
                        "aux_bytes_fp32": sizes["fp32_buffered"],
                        "aux_bytes_bf16_stream": sizes["bf16_streaming"], "reduction": reduction})


def memory_accounting(shape=(1024, 1024)) -> dict[str, int]:
    """Auxiliary acceleration bytes held after one step in each precision mode."""
    out = {}
    g = np.ones(shape)
    for prec in Precision:
        group = ParamGroup("p", np.zeros(shape), kind=ParamKind.MATRIX)
        mona_step(group, g, OptimizerConfig(precision=prec, learning_rate=0.0))
        out[prec.value] = group.auxiliary_bytes()
    return out


# --- 9. timing --------------------------------------------------------------------------

@dataclass(frozen=True)
class BenchReport:
    shape: tuple[int, int]
    steps: int
    inner_median_ns: dict
    iter_median_ns: dict
    inner_overhead: float
    iter_overhead: float
    control_inner: float
    control_iter: float
    noise_band: float


def _median_overhead(a, b) -> float:
    return float(np.median(a) / np.median(b) - 1.0)


def bench_overhead(shape=(1024, 1024), steps: int = 1000, warmup: int = 5, seed: int = 0,
                   ns: NsConfig = DEFAULT_NS, batch: int = 8, noise_floor: float = 0.01) -> BenchReport:
    """Median inner-step and end-to-end times for MONA, Muon and a second Muon.

    The three arms are interleaved step by step so slow drifts in machine
    load hit all of them alike. The end-to-end step includes the forward and
    backward pass of a linear layer ``y = x W`` with squared loss.
    """
    rng = np.random.default_rng(seed)
    w0 = rng.standard_normal(shape) / np.sqrt(shape[0])
    arms = {"mona": mona_step, "muon": muon_step, "muon_control": muon_step}
    groups = {k: ParamGroup(k, w0, kind=ParamKind.MATRIX) for k in arms}
    cfg = OptimizerConfig(ns=ns, learning_rate=1e-3)
    inner = {k: [] for k in arms}
    total = {k: [] for k in arms}
    for k in range(warmup + steps):
        x = rng.standard_normal((batch, shape[0]))
        y = rng.standard_normal((batch, shape[1]))
        order = list(arms)
        if k % 2:
            order.reverse()
        for name in order:
            group = groups[name]
            t0 = time.perf_counter_ns()
            err = x @ group.weights - y
            grad = x.T @ err * (2.0 / batch)
            t1 = time.perf_counter_ns()
            arms[name](group, grad, cfg)
            t2 = time.perf_counter_ns()
            if k >= warmup:
                inner[name].append(t2 - t1)
                total[name].append(t2 - t0)
    control_inner = _median_overhead(inner["muon_control"], inner["muon"])
    control_iter = _median_overhead(total["muon_control"], total["muon"])
    return BenchReport(
        shape=tuple(shape), steps=steps,
        inner_median_ns={k: float(np.median(v)) for k, v in inner.items()},
        iter_median_ns={k: float(np.median(v)) for k, v in total.items()},
        inner_overhead=_median_overhead(inner["mona"], inner["muon"]),
        iter_overhead=_median_overhead(total["mona"], total["muon"]),
        control_inner=control_inner, control_iter=control_iter,
        noise_band=max(abs(control_iter), noise_floor),
    )


def bench_steps_default() -> int:
    return int(os.environ.get("MONA_BENCH_STEPS", "100"))


def check_timing(steps: int | None = None, shape=(1024, 1024), ns: NsConfig = DEFAULT_NS) -> CheckResult:
    rep = bench_overhead(shape, steps or bench_steps_default(), ns=ns)
    ok = rep.inner_overhead <= 0.05 and rep.iter_overhead <= 2.0 * rep.noise_band
    return CheckResult("timing_overhead", PASS if ok else FAIL,
                       {"shape": f"{shape[0]}x{shape[1]}", "steps": rep.steps,
                        "inner_overhead": rep.inner_overhead, "iter_overhead": rep.iter_overhead,
                        "control_inner": rep.control_inner, "control_iter": rep.control_iter,
                        "noise_band": rep.noise_band})


# --- 10. gradients ------------------------------------------------------------------------

def central_difference(f, x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    x = np.array(x, dtype=np.float64)
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        old = x[idx]
        x[idx] = old + h
        fp = f(x)
        x[idx] = old - h
        fm = f(x)
        x[idx] = old
        g[idx] = (fp - fm) / (2 * h)
    return g


def _net_fd_error(spec: MlpSpec, rng, batch: int = 8) -> float:
    params = spec.init_params()
    for k in params:
        params[k] = params[k] + 0.3 * rng.standard_normal(params[k].shape)
    x = rng.standard_normal((batch, spec.layer_dims[0]))
    y = rng.standard_normal((batch, spec.layer_dims[-1]))
    _, grads = forward_backward(params, x, y, spec.activation)
    worst = 0.0
    for name in params:
        def f(v, name=name):
            p = dict(params)
            p[name] = v
            return forward_backward(p, x, y, spec.activation)[0]
        worst = max(worst, float(np.max(np.abs(central_difference(f, params[name]) - grads[name]))))
    return worst


def check_gradients(points: int = 100, seed: int = 10) -> CheckResult:
    rng = np.random.default_rng(seed)
    quad = QuadraticLandscape.random((3, 2), np.exp(rng.uniform(0, 3, size=6)), seed=seed)
    well = ESCAPE.landscape()
    worst = {"quadratic": 0.0, "double_well": 0.0, "mlp_4_8_4": 0.0, "mlp_4_16_16_4": 0.0}
    for _ in range(points):
        w = rng.standard_normal(quad.shape) * 2
        fd = central_difference(lambda v: quad.loss_and_grad(v)[0], w)
        worst["quadratic"] = max(worst["quadratic"], float(np.max(np.abs(fd - quad.loss_and_grad(w)[1]))))
        x = well.flat_center * rng.uniform(-0.25, 1.25) + rng.standard_normal((2, 2)) * 0.5
        fd = central_difference(lambda v: well.loss_and_grad(v)[0], x)
        worst["double_well"] = max(worst["double_well"], float(np.max(np.abs(fd - well.loss_and_grad(x)[1]))))
    for i in range(points):
        worst["mlp_4_8_4"] = max(worst["mlp_4_8_4"], _net_fd_error(MlpSpec((4, 8, 4), init_seed=i), rng))
    for i in range(points):
        worst["mlp_4_16_16_4"] = max(worst["mlp_4_16_16_4"],
                                     _net_fd_error(MlpSpec((4, 16, 16, 4), init_seed=i), rng))
    ok = max(worst.values()) <= 1e-5
    return CheckResult("gradient_fd", PASS if ok else FAIL, {"points": points, **worst})


# --- suite -----------------------------------------------------------------------------------

QUICK = {
    "reduction_identity": dict(fixtures=20),
    "lemma_bounds": dict(landscape_runs=4, landscape_steps=1000, net_steps=200),
    "ns_band": dict(matrices=100),
    "theorem1_bound": dict(),
    "rate_probe": dict(),
    "accel_curvature_ratio": dict(seeds=range(3)),
    "escape_rate": dict(seeds=range(20)),
    "alpha_regime": dict(),
    "optimizer_ordering": None,
    "mona_lite": dict(sequences=10, seeds=range(2)),
    "timing_overhead": None,
    "gradient_fd": dict(points=10),
}

CHECKS = {
    "reduction_identity": check_reduction,
    "lemma_bounds": check_lemmas,
    "ns_band": check_ns_band,
    "theorem1_bound": check_theorem1,
    "rate_probe": check_rate,
    "accel_curvature_ratio": check_prop1,
    "escape_rate": check_escape,
    "alpha_regime": check_alpha_regime,
    "optimizer_ordering": check_ordering,
    "mona_lite": check_lite,
    "timing_overhead": check_timing,
    "gradient_fd": check_gradients,
}

_TAKES_ALPHA = {"lemma_bounds", "theorem1_bound", "rate_probe", "accel_curvature_ratio",
                "escape_rate", "alpha_regime", "optimizer_ordering", "mona_lite"}


def run_suite(names=None, quick: bool = False, ns: NsConfig = DEFAULT_NS,
              alpha: float | None = None, progress=None) -> list[CheckResult]:
    """Run the named checks (all by default). ``quick`` shrinks fixture sizes
    and skips the long ordering and timing checks."""
    results = []
    for name in names or CHECKS:
        kwargs = {}
        if quick:
            if QUICK[name] is None:
                results.append(CheckResult(name, SKIPPED, {}, "not run in quick mode"))
                continue
            kwargs.update(QUICK[name])
        if name != "gradient_fd":
            kwargs["ns"] = ns
        if name in _TAKES_ALPHA:
            kwargs["alpha"] = alpha
        result = CHECKS[name](**kwargs)
        if progress is not None:
            progress(result)
        results.append(result)
    return results
