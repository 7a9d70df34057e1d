import numpy as np
import pytest

from mona.landscapes import (DoubleWellLandscape, QuadraticLandscape, StochasticGradientOracle,
                             escape_experiment, random_orthogonal)
from mona.matrixcore import ShapeError
from mona.optimizers import OptimizerConfig
from oracles import central_fd


def test_quadratic_known_values():
    l = QuadraticLandscape.diagonal([4, 4, 1, 1], (2, 2))
    w = np.array([[1.0, 0.0], [0.0, 2.0]])
    loss, grad = l.loss_and_grad(w)
    assert loss == pytest.approx(0.5 * (4 * 1 + 1 * 4))
    assert np.array_equal(grad, np.array([[4.0, 0.0], [0.0, 2.0]]))
    assert l.smoothness == 4.0


def test_quadratic_minimum():
    l = QuadraticLandscape.random((3, 2), np.linspace(1, 5, 6), seed=4)
    loss, grad = l.loss_and_grad(l.target)
    assert loss == 0.0 and np.all(grad == 0)


def test_quadratic_gradient_matches_fd():
    l = QuadraticLandscape.random((3, 4), np.linspace(0.5, 8, 12), seed=1)
    w = np.random.default_rng(2).standard_normal((3, 4))
    fd = central_fd(lambda x: l.loss_and_grad(x)[0], w)
    assert np.max(np.abs(fd - l.loss_and_grad(w)[1])) <= 1e-6


def test_quadratic_validation():
    with pytest.raises(ValueError):
        QuadraticLandscape.diagonal([1, -1, 1, 1], (2, 2))
    with pytest.raises(ShapeError):
        QuadraticLandscape.diagonal([1, 1, 1], (2, 2))
    with pytest.raises(ValueError):
        QuadraticLandscape(np.zeros((1, 2)), [1, 1], np.array([[1.0, 1.0], [0.0, 1.0]]))
    with pytest.raises(ShapeError):
        QuadraticLandscape.diagonal([1, 1, 1, 1], (2, 2)).loss_and_grad(np.zeros((4, 1)))


def test_random_orthogonal_is_orthogonal():
    q = random_orthogonal(6, np.random.default_rng(0))
    assert np.allclose(q.T @ q, np.eye(6), atol=1e-12)


def test_eigenbasis_coordinates():
    l = QuadraticLandscape.random((2, 2), [1, 2, 3, 4], seed=0)
    v = l.basis[:, 2].reshape(2, 2)
    coords = l.to_eigenbasis(v)
    assert np.allclose(coords, np.eye(4)[2], atol=1e-12)


def well():
    return DoubleWellLandscape(np.array([[0.0, 0.0]]), np.array([[4.0, 0.0]]),
                               sharp_width=0.25, flat_width=2.0)


def test_double_well_gradient_matches_fd():
    l = well()
    for x in ([[0.1, -0.2]], [[2.0, 0.5]], [[3.5, 1.0]]):
        x = np.array(x)
        fd = central_fd(lambda y: l.loss_and_grad(y)[0], x, h=1e-6)
        assert np.max(np.abs(fd - l.loss_and_grad(x)[1])) <= 1e-6


def test_double_well_curvatures_and_minima():
    l = well()
    assert l.sharp_curvature == pytest.approx(16.0)
    assert l.flat_curvature == pytest.approx(0.25)
    # the wide well's tail still tilts the sharp centre, but not the reverse
    assert np.linalg.norm(l.loss_and_grad(l.flat_center)[1]) < 1e-12
    mid = l.loss_and_grad(np.array([[1.0, 0.0]]))[0]
    assert l.loss_and_grad(l.sharp_center)[0] < mid
    assert l.nearer_flat(np.array([[3.0, 0.0]])) and not l.nearer_flat(np.array([[1.0, 0.0]]))


def test_double_well_validation():
    with pytest.raises(ShapeError):
        DoubleWellLandscape(np.zeros((1, 2)), np.zeros((2, 1)))
    with pytest.raises(ValueError):
        DoubleWellLandscape(np.zeros((1, 2)), np.ones((1, 2)), sharp_width=0.0)


def test_oracle_is_replayable():
    l = QuadraticLandscape.diagonal([1, 2, 3, 4], (2, 2))
    o = StochasticGradientOracle(l, 0.5, rng_seed=3)
    w = np.ones((2, 2))
    assert np.array_equal(o(w, 17), o(w, 17))
    assert not np.array_equal(o(w, 17), o(w, 18))
    assert not np.array_equal(o(w, 17), StochasticGradientOracle(l, 0.5, rng_seed=4)(w, 17))


def test_oracle_noise_scale():
    l = QuadraticLandscape.diagonal(np.ones(100), (10, 10))
    o = StochasticGradientOracle(l, 2.0)
    norms = [np.linalg.norm(o.noise(k)) for k in range(300)]
    assert np.mean(np.square(norms)) == pytest.approx(4.0, rel=0.05)


def test_oracle_zero_noise_is_exact():
    l = QuadraticLandscape.diagonal([1, 2, 3, 4], (2, 2))
    w = np.arange(4.0).reshape(2, 2)
    assert np.array_equal(StochasticGradientOracle(l)(w, 0), l.loss_and_grad(w)[1])


def test_oracle_clipping():
    l = QuadraticLandscape.diagonal([100, 100, 100, 100], (2, 2))
    o = StochasticGradientOracle(l, 1.0, clip_bound=0.3)
    for k in range(50):
        assert np.linalg.norm(o(np.full((2, 2), 3.0), k)) <= 0.3


def test_oracle_validation():
    l = QuadraticLandscape.diagonal([1, 1, 1, 1], (2, 2))
    with pytest.raises(ValueError):
        StochasticGradientOracle(l, -1.0)
    with pytest.raises(ValueError):
        StochasticGradientOracle(l, clip_bound=0.0)


def test_escape_experiment_smoke():
    l = well()
    o = StochasticGradientOracle(l, 0.7)
    cfg = OptimizerConfig(learning_rate=0.45, weight_decay=0.0)
    rate = escape_experiment(cfg, l, o, range(4), 50)
    assert 0.0 <= rate <= 1.0
    assert escape_experiment(cfg, l, o, range(4), 50) == rate
    assert escape_experiment(cfg, l, o, range(4), 0) == 0.0
    with pytest.raises(ValueError):
        escape_experiment(cfg, l, o, range(2), 5, from_well="middle")


def test_identity_hessian_unit_offset():
    l = QuadraticLandscape.diagonal([1.0, 1.0], (1, 2), target=np.array([[0.3, -0.7]]))
    loss, grad = l.loss_and_grad(l.target + np.array([[1.0, 0.0]]))
    assert loss == pytest.approx(0.5, rel=1e-15)
    assert np.allclose(grad, [[1.0, 0.0]], rtol=0, atol=1e-15)


def test_far_separated_wells_are_stationary():
    # separation of 20 flat widths makes each well's tail invisible at the other centre
    l = DoubleWellLandscape(np.zeros((1, 2)), np.array([[20.0, 0.0]]), sharp_depth=2.0,
                            sharp_width=0.25, flat_width=1.0)
    loss, grad = l.loss_and_grad(l.sharp_center)
    assert loss == pytest.approx(-2.0, abs=1e-12)
    for c in (l.sharp_center, l.flat_center):
        assert np.linalg.norm(l.loss_and_grad(c)[1]) <= 1e-6


def test_oracle_is_unbiased_monte_carlo():
    l = QuadraticLandscape.random((2, 2), [1, 2, 3, 4], seed=5)
    sigma, draws = 0.5, 100_000
    o = StochasticGradientOracle(l, sigma, rng_seed=11)
    w = np.ones((2, 2))
    total = np.zeros((2, 2))
    for k in range(draws):
        total += o(w, k)
    entry_sd = sigma / 2.0
    assert np.all(np.abs(total / draws - l.loss_and_grad(w)[1]) <= 3 * entry_sd / np.sqrt(draws))


def test_no_noise_no_escape():
    l = well()
    cfg = OptimizerConfig(learning_rate=0.45, weight_decay=0.0, accel_alpha=0.0)
    assert escape_experiment(cfg, l, StochasticGradientOracle(l), range(5), 100, jitter=0.0) == 0.0
