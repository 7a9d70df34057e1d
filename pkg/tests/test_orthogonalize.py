import numpy as np
import pytest

from mona.orthogonalize import (DEFAULT_NS, NsConfig, newton_schulz, newton_schulz_flagged,
                                ns_diagnostics, scalar_trajectory)
from oracles import ns_reference, scalar_ns


def rotation(theta):
    return np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])


def test_default_coefficients():
    assert DEFAULT_NS.coefficients == (3.4445, -4.7750, 2.0315)
    assert DEFAULT_NS.steps == 5


@pytest.mark.parametrize("kwargs", [dict(steps=0), dict(steps=2.5), dict(epsilon=0.0)])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        NsConfig(**kwargs)


def test_diag_half_follows_scalar_recurrence():
    out = newton_schulz(np.diag([0.5, 0.5]))
    oracle = scalar_ns(1 / np.sqrt(2))
    assert np.allclose(out, oracle[-1] * np.eye(2), atol=1e-13, rtol=0)
    assert out[0, 0] == pytest.approx(1.1085, abs=1e-3)


def test_scalar_trajectory_matches_oracle():
    assert np.allclose(scalar_trajectory(1 / np.sqrt(2)), scalar_ns(1 / np.sqrt(2)), rtol=1e-15)
    # published trajectory values, to the stated tolerance
    for got, want in zip(scalar_trajectory(1 / np.sqrt(2)), [0.7071, 1.1066, 0.7124, 1.1002, 0.7054, 1.1085]):
        assert got == pytest.approx(want, abs=1e-3)


@pytest.mark.parametrize("theta,c", [(0.3, 2.0), (1.2, 0.01), (-2.0, 50.0)])
def test_scaled_rotation(theta, c):
    r = rotation(theta)
    out = newton_schulz(c * r)
    assert np.allclose(out, scalar_ns(1 / np.sqrt(2))[-1] * r, atol=1e-12)


def test_zero_is_degenerate():
    out, flag = newton_schulz_flagged(np.zeros((4, 4)))
    assert flag and np.array_equal(out, np.zeros((4, 4)))


def test_matches_literal_iteration_on_tall_and_wide():
    rng = np.random.default_rng(0)
    for shape in [(7, 3), (3, 7), (5, 5), (1, 4), (4, 1)]:
        m = rng.standard_normal(shape)
        assert np.allclose(newton_schulz(m), ns_reference(m), atol=1e-12)


def test_diag_06_08_band():
    rep = ns_diagnostics(np.diag([0.6, 0.8]))
    lo, hi = rep.singular_band
    assert 0.68 <= lo and hi <= 1.14
    # each singular value of the normalized input follows the scalar map
    assert lo == pytest.approx(min(scalar_ns(0.6)[-1], scalar_ns(0.8)[-1]), abs=1e-12)


def test_orthogonal_input_gives_flat_band():
    q, _ = np.linalg.qr(np.random.default_rng(1).standard_normal((2, 2)))
    lo, hi = ns_diagnostics(q).singular_band
    assert hi - lo <= 1e-9


def test_random_8x4_subspaces_preserved():
    rng = np.random.default_rng(2)
    u, _ = np.linalg.qr(rng.standard_normal((8, 4)))
    v, _ = np.linalg.qr(rng.standard_normal((4, 4)))
    m = (u * np.array([10.0, 6.0, 3.0, 1.0])) @ v.T
    rep = ns_diagnostics(m)
    assert rep.rank == 4
    assert rep.min_cosine >= 0.999


def test_rank_deficient_input():
    rng = np.random.default_rng(3)
    m = np.outer(rng.standard_normal(5), rng.standard_normal(3))
    rep = ns_diagnostics(m)
    assert rep.rank == 1
    assert rep.min_cosine >= 1 - 1e-9


def test_ns_error_is_small_but_not_zero():
    # the default coefficients oscillate around 1 instead of converging
    rep = ns_diagnostics(np.diag([1.0, 0.5, 0.25]))
    assert 1e-3 < rep.ns_error < 1.0
