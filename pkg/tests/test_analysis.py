import json

import numpy as np
import pytest

from mona.analysis import (FAIL, PASS, SKIPPED, BoundEstimate, CheckResult, check_lemma_bounds,
                           check_theorem1, escape_direction_stat, estimate_alignment, rate_probe,
                           report_json, report_text, run_landscape, theorem1_rhs)
from mona.landscapes import QuadraticLandscape, StochasticGradientOracle
from mona.optimizers import OptimizerConfig
from mona.records import RunRecord


def rec(step, g, a=0.0, m=0.0, mom=0.0):
    return RunRecord(step=step, train_loss=0.0, grad_norm=g, accel_norm=a, mixed_norm=m,
                     momentum_norm=mom)


def test_lemma_injected_violation():
    recs = [rec(k, 1.0, a=0.5) for k in range(1, 6)]
    recs[3].accel_norm = 3.0
    report = check_lemma_bounds(recs)
    assert len(report.violations) == 1
    v = report.violations[0]
    assert (v.step, v.quantity, v.value, v.bound) == (4, "accel", 3.0, 2.0)


def test_lemma_alpha_zero_bounds():
    cfg = OptimizerConfig(accel_alpha=0.0, momentum=0.5)
    ok = check_lemma_bounds([rec(1, 1.0, a=2.0, m=1.0, mom=2.0)], cfg)
    assert ok.passed
    bad = check_lemma_bounds([rec(1, 1.0, a=2.0, m=1.0, mom=2.1)], cfg)
    assert [v.quantity for v in bad.violations] == ["momentum"]


def test_lemma_skips_diverged_and_nan():
    recs = [rec(1, 1.0), RunRecord(step=2, train_loss=np.inf, status="diverged"),
            rec(3, float("nan"), a=100.0)]
    assert check_lemma_bounds(recs).steps_checked == 1


def test_lemma_holds_on_real_run():
    l = QuadraticLandscape.random((3, 3), np.linspace(1, 10, 9), seed=0)
    run = run_landscape(l, StochasticGradientOracle(l, 0.5), "mona", OptimizerConfig(), 300,
                        np.zeros((3, 3)))
    assert check_lemma_bounds(run.records).passed


def test_identity_hessian_alignment():
    l = QuadraticLandscape.diagonal(np.ones(4), (2, 2), target=np.eye(2))
    run = run_landscape(l, StochasticGradientOracle(l), "muon", OptimizerConfig(weight_decay=0.0),
                        50, np.zeros((2, 2)))
    est = estimate_alignment(run, burn_in=0)
    assert est.positive_fraction == 1.0 and est.rho > 0


def test_alignment_ignores_tiny_gradients():
    l = QuadraticLandscape.diagonal(np.ones(4), (2, 2))
    run = run_landscape(l, StochasticGradientOracle(l), "mona", OptimizerConfig(), 3, np.zeros((2, 2)))
    est = estimate_alignment(run, burn_in=0)
    assert est.steps_used == 0 and np.isnan(est.rho)


def test_theorem1_at_the_optimum_has_zero_lhs():
    l = QuadraticLandscape.diagonal([4, 4, 1, 1], (2, 2))
    run = run_landscape(l, StochasticGradientOracle(l), "mona", OptimizerConfig(), 1, l.target)
    assert run.grad_sq.mean() == 0.0
    assert check_theorem1(run, l).status == SKIPPED


def test_theorem1_passes_on_small_quadratic():
    l = QuadraticLandscape.diagonal([4, 4, 1, 1], (2, 2))
    cfg = OptimizerConfig(learning_rate=1e-3, weight_decay=0.0)
    run = run_landscape(l, StochasticGradientOracle(l, 0.1), "mona", cfg, 2000,
                        np.array([[3.0, 0.9], [-1.5, 3.0]]))
    report = check_theorem1(run, l)
    assert report.status == PASS and report.lhs <= report.rhs
    assert report.bound.c_m >= 2


def test_theorem1_skips_large_step():
    l = QuadraticLandscape.diagonal([4, 4, 1, 1], (2, 2))
    run = run_landscape(l, StochasticGradientOracle(l, 0.1), "mona",
                        OptimizerConfig(learning_rate=0.5, weight_decay=0.0), 100, np.ones((2, 2)))
    report = check_theorem1(run, l)
    assert report.status in (SKIPPED, FAIL)
    if report.status == SKIPPED:
        assert report.reason


def test_bound_constants():
    b = BoundEstimate(L=4.0, rho=0.5, g_max=1.0, c_m=2.0, rank=2, gamma=0.2, alpha=-50.0, momentum=0.9)
    assert b.c2 == pytest.approx(4 * 0.04 * 2 / 2)
    assert b.c3 == pytest.approx(0.1)
    assert b.c4 == pytest.approx(0.04)
    assert b.g_bar == pytest.approx(101.0)
    assert b.c1 == pytest.approx(1010.0)
    rhs = b.rhs(10.0, 1e-3, 1000)
    assert rhs == pytest.approx(10 / (1e-3 * 0.1 * 1000) + 1e-3 * 4 * 0.04 / 0.1)
    assert theorem1_rhs(10.0, 1e-3, 1000, 4.0, 0.5, 0.2, 2.0) == pytest.approx(rhs)


def test_rhs_decreases_in_alignment():
    vals = [theorem1_rhs(1.0, 1e-3, 100, 4.0, r, 0.2, 2.0) for r in (0.1, 0.2, 0.4)]
    assert vals[0] > vals[1] > vals[2]


def test_rate_probe_runs():
    l = QuadraticLandscape.diagonal([4, 4, 1, 1], (2, 2))
    rep = rate_probe(l, StochasticGradientOracle(l, 0.1), OptimizerConfig(weight_decay=0.0),
                     np.ones((2, 2)), steps=(50, 200))
    assert rep.steps == (50, 200) and rep.ratio > 0


def test_isotropic_direction_ratio_is_one():
    l = QuadraticLandscape.random((2, 2), np.ones(4), seed=1)
    accel = np.random.default_rng(0).standard_normal((20, 2, 2))
    assert escape_direction_stat(accel, l).ratio == pytest.approx(1.0, rel=1e-12)


def test_direction_stat_picks_sharp_axis():
    l = QuadraticLandscape.diagonal([100, 1, 1, 1], (2, 2))
    accel = np.zeros((3, 2, 2))
    accel[:, 0, 0] = 10.0
    accel[:, 1, 1] = 1.0
    stat = escape_direction_stat(accel, l)
    assert stat.ratio == pytest.approx(10.0 / (1.0 / 3.0))


def test_reports_format():
    results = [CheckResult("a", PASS, {"x": 0.5, "inf": float("inf")}), CheckResult("b", FAIL, detail="why")]
    text = report_text(results)
    assert text.splitlines()[0].startswith("[PASS   ] a: x=0.5")
    assert "(why)" in text
    data = json.loads(report_json(results))
    assert data[0]["numbers"]["inf"] == "inf"
    assert not results[1].ok and CheckResult("c", SKIPPED).ok


def test_scalar_alignment_follows_sign():
    l = QuadraticLandscape.diagonal([2.0], (1, 1), target=np.array([[1.0]]))
    run = run_landscape(l, StochasticGradientOracle(l), "muon", OptimizerConfig(learning_rate=1e-3),
                        20, np.array([[3.0]]))
    assert np.all(np.abs(np.abs(run.direction_sq) - run.direction_sq[0]) < 1e-12)
    assert estimate_alignment(run, burn_in=0).positive_fraction == 1.0


def test_identity_hessian_alignment_after_burn_in():
    l = QuadraticLandscape.random((3, 3), np.ones(9), seed=2)
    run = run_landscape(l, StochasticGradientOracle(l), "muon",
                        OptimizerConfig(learning_rate=1e-3, weight_decay=0.0), 60, np.zeros((3, 3)))
    assert estimate_alignment(run, burn_in=10).positive_fraction == 1.0


def test_high_noise_alignment_is_reported_not_raised():
    l = QuadraticLandscape.diagonal(np.ones(4), (2, 2))
    run = run_landscape(l, StochasticGradientOracle(l, 50.0), "mona", OptimizerConfig(), 200,
                        0.01 * np.ones((2, 2)))
    est = estimate_alignment(run, burn_in=0)
    assert np.isfinite(est.rho) and 0.0 <= est.positive_fraction <= 1.0
