"""Synthetic objectives with known geometry and a replayable noisy-gradient oracle."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Protocol

import numpy as np

from .matrixcore import ShapeError, as_matrix, frobenius_norm


class Landscape(Protocol):
    shape: tuple[int, int]

    def loss_and_grad(self, w: np.ndarray) -> tuple[float, np.ndarray]: ...


def random_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


@dataclass(frozen=True)
class QuadraticLandscape:
    """``f(W) = 1/2 <W - W*, H (W - W*)>`` with ``H = Q diag(eigs) Q^T``.

    ``H`` acts on the row-major vectorization of ``W``, so ``eigs`` has one
    entry per matrix element.
    """

    target: np.ndarray
    eigs: np.ndarray
    basis: np.ndarray
    hessian: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        target = as_matrix(self.target, "target")
        eigs = np.asarray(self.eigs, dtype=np.float64).ravel()
        basis = np.asarray(self.basis, dtype=np.float64)
        n = target.size
        if eigs.shape != (n,) or basis.shape != (n, n):
            raise ShapeError(f"need {n} eigenvalues and a {n}x{n} basis for target {target.shape}")
        if not np.all(eigs > 0):
            raise ValueError("all Hessian eigenvalues must be positive")
        if np.linalg.norm(basis.T @ basis - np.eye(n)) > 1e-10:
            raise ValueError("basis must be orthogonal")
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "eigs", eigs)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "hessian", (basis * eigs) @ basis.T)

    @classmethod
    def diagonal(cls, eigs, shape: tuple[int, int], target=None) -> "QuadraticLandscape":
        n = shape[0] * shape[1]
        eigs = np.asarray(eigs, dtype=np.float64)
        if target is None:
            target = np.zeros(shape)
        return cls(target=target, eigs=eigs, basis=np.eye(n))

    @classmethod
    def random(cls, shape: tuple[int, int], eigs, seed: int) -> "QuadraticLandscape":
        rng = np.random.default_rng(seed)
        n = shape[0] * shape[1]
        return cls(target=rng.standard_normal(shape), eigs=eigs, basis=random_orthogonal(n, rng))

    @property
    def shape(self) -> tuple[int, int]:
        return self.target.shape

    @property
    def smoothness(self) -> float:
        return float(self.eigs.max())

    @property
    def min_value(self) -> float:
        return 0.0

    def loss_and_grad(self, w: np.ndarray) -> tuple[float, np.ndarray]:
        w = as_matrix(w, "w")
        if w.shape != self.shape:
            raise ShapeError(f"expected shape {self.shape}, got {w.shape}")
        delta = (w - self.target).ravel()
        hd = self.hessian @ delta
        return 0.5 * float(delta @ hd), hd.reshape(self.shape)

    def to_eigenbasis(self, m: np.ndarray) -> np.ndarray:
        """Coordinates of ``vec(m)`` along each Hessian eigenvector."""
        return self.basis.T @ np.asarray(m, dtype=np.float64).ravel()


def quad_eval(l: QuadraticLandscape, w: np.ndarray) -> tuple[float, np.ndarray]:
    return l.loss_and_grad(w)


@dataclass(frozen=True)
class DoubleWellLandscape:
    """Negative mixture of two Gaussians: a narrow deep-curvature well and a
    wide one. Curvature at a centre is roughly ``depth / width**2``."""

    sharp_center: np.ndarray
    flat_center: np.ndarray
    sharp_depth: float = 1.0
    flat_depth: float = 1.0
    sharp_width: float = 0.1
    flat_width: float = 1.0

    def __post_init__(self):
        sc = as_matrix(self.sharp_center, "sharp_center")
        fc = as_matrix(self.flat_center, "flat_center")
        if sc.shape != fc.shape:
            raise ShapeError("well centres must share a shape")
        for label in ("sharp_depth", "flat_depth", "sharp_width", "flat_width"):
            if not getattr(self, label) > 0:
                raise ValueError(f"{label} must be positive")
        object.__setattr__(self, "sharp_center", sc)
        object.__setattr__(self, "flat_center", fc)

    @property
    def shape(self) -> tuple[int, int]:
        return self.sharp_center.shape

    @property
    def sharp_curvature(self) -> float:
        return self.sharp_depth / self.sharp_width**2

    @property
    def flat_curvature(self) -> float:
        return self.flat_depth / self.flat_width**2

    def loss_and_grad(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        x = as_matrix(x, "x")
        if x.shape != self.shape:
            raise ShapeError(f"expected shape {self.shape}, got {x.shape}")
        loss = 0.0
        grad = np.zeros(self.shape)
        for center, depth, width in (
            (self.sharp_center, self.sharp_depth, self.sharp_width),
            (self.flat_center, self.flat_depth, self.flat_width),
        ):
            d = x - center
            bump = depth * np.exp(-float(np.sum(d * d)) / (2.0 * width**2))
            loss -= bump
            grad += bump * d / width**2
        return loss, grad

    def nearer_flat(self, x: np.ndarray) -> bool:
        return frobenius_norm(x - self.flat_center) < frobenius_norm(x - self.sharp_center)


def doublewell_eval(l: DoubleWellLandscape, x: np.ndarray) -> tuple[float, np.ndarray]:
    return l.loss_and_grad(x)


@dataclass(frozen=True)
class StochasticGradientOracle:
    """True gradient plus Gaussian noise, clipped to a Frobenius ball.

    Per-entry noise has standard deviation ``sigma / sqrt(numel)`` so the
    total noise variance is ``sigma**2``. The draw depends only on
    ``(rng_seed, step)``.
    """

    base: Landscape
    noise_sigma: float = 0.0
    clip_bound: float = np.inf
    rng_seed: int = 0

    def __post_init__(self):
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")
        if not self.clip_bound > 0:
            raise ValueError("clip_bound must be positive")

    def noise(self, step: int) -> np.ndarray:
        if self.noise_sigma == 0:
            return np.zeros(self.base.shape)
        rng = np.random.default_rng([self.rng_seed, step])
        n = self.base.shape[0] * self.base.shape[1]
        return rng.standard_normal(self.base.shape) * (self.noise_sigma / np.sqrt(n))

    def __call__(self, w: np.ndarray, step: int) -> np.ndarray:
        _, grad = self.base.loss_and_grad(w)
        g = grad + self.noise(step)
        norm = frobenius_norm(g)
        if norm > self.clip_bound:
            g = g * (self.clip_bound / norm)
            while frobenius_norm(g) > self.clip_bound:
                g = g * (1.0 - 2.0**-52)
        return g


def noisy_grad(o: StochasticGradientOracle, w: np.ndarray, step: int) -> np.ndarray:
    return o(w, step)


def escape_experiment(cfg, l: DoubleWellLandscape, o: StochasticGradientOracle, seeds, steps: int,
                      algorithm: str = "mona", from_well: str = "sharp",
                      jitter: float = 0.05) -> float:
    """Fraction of seeds that finish nearer the other well than the one they start in.

    Each seed re-keys the gradient noise and draws a start point
    ``centre + jitter * N(0, I)`` around the ``from_well`` centre.
    """
    from .optimizers import ParamGroup, ParamKind, mona_step, muon_step

    if from_well not in ("sharp", "flat"):
        raise ValueError(f"from_well must be 'sharp' or 'flat', got {from_well!r}")
    step_fn = muon_step if algorithm == "muon" else mona_step
    start = l.sharp_center if from_well == "sharp" else l.flat_center
    seeds = list(seeds)
    escaped = 0
    for seed in seeds:
        oracle = replace(o, base=l, rng_seed=seed)
        w0 = start + jitter * np.random.default_rng([seed, 7]).standard_normal(l.shape)
        group = ParamGroup("x", w0, kind=ParamKind.MATRIX)
        for k in range(steps):
            step_fn(group, oracle(group.weights, k), cfg)
        escaped += l.nearer_flat(group.weights) == (from_well == "sharp")
    return escaped / len(seeds)
