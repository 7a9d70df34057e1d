"""Quintic Newton-Schulz orthogonalization of momentum matrices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matrixcore import as_matrix, frobenius_norm, svd_oracle


@dataclass(frozen=True)
class NsConfig:
    steps: int = 5
    coeff_a: float = 3.4445
    coeff_b: float = -4.7750
    coeff_c: float = 2.0315
    epsilon: float = 1e-12

    def __post_init__(self):
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValueError(f"steps must be a positive integer, got {self.steps}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")

    @property
    def coefficients(self) -> tuple[float, float, float]:
        return (self.coeff_a, self.coeff_b, self.coeff_c)


DEFAULT_NS = NsConfig()


def newton_schulz_flagged(m: np.ndarray, cfg: NsConfig = DEFAULT_NS) -> tuple[np.ndarray, bool]:
    """Run the iteration and report whether the input was degenerate.

    A momentum matrix with Frobenius norm below ``cfg.epsilon`` has no
    usable direction; it maps to zeros and the flag is set.
    """
    m = as_matrix(m, "m")
    norm = frobenius_norm(m)
    if norm < cfg.epsilon:
        return np.zeros_like(m), True
    a, b, c = cfg.coefficients
    x = m / norm
    tall = x.shape[0] > x.shape[1]
    if tall:
        x = x.T
    for _ in range(cfg.steps):
        gram = x @ x.T
        poly = b * gram + c * (gram @ gram)
        x = a * x + poly @ x
    if tall:
        x = x.T
    return np.ascontiguousarray(x), False


def newton_schulz(m: np.ndarray, cfg: NsConfig = DEFAULT_NS) -> np.ndarray:
    """Approximate the polar factor ``U V^T`` of ``m``.

    The input is scaled to unit Frobenius norm and pushed through
    ``cfg.steps`` rounds of ``X <- aX + b(XX^T)X + c(XX^T)^2 X``. The default
    coefficients leave singular values oscillating in a band around 1
    rather than converging to exactly 1.
    """
    return newton_schulz_flagged(m, cfg)[0]


def scalar_trajectory(x0: float, cfg: NsConfig = DEFAULT_NS) -> list[float]:
    """Iterates of ``x <- a x + b x^3 + c x^5`` starting at ``x0``.

    Each singular value of the normalized input follows this recurrence
    independently, so it predicts the output spectrum exactly.
    """
    a, b, c = cfg.coefficients
    out = [float(x0)]
    x = float(x0)
    for _ in range(cfg.steps):
        x = a * x + b * x**3 + c * x**5
        out.append(x)
    return out


def principal_cosines(q1: np.ndarray, q2: np.ndarray) -> np.ndarray:
    """Cosines of the principal angles between two orthonormal column sets."""
    return np.clip(svd_oracle(q1.T @ q2).sigma, 0.0, 1.0)


@dataclass(frozen=True)
class NsReport:
    output: np.ndarray
    singular_band: tuple[float, float]
    ns_error: float
    polar_error: float
    rank: int
    left_cosines: np.ndarray
    right_cosines: np.ndarray
    degenerate: bool

    @property
    def min_cosine(self) -> float:
        return float(min(self.left_cosines.min(), self.right_cosines.min()))


def ns_diagnostics(m: np.ndarray, cfg: NsConfig = DEFAULT_NS, rank_tol: float = 1e-10) -> NsReport:
    """Run Newton-Schulz on ``m`` and measure the result with the SVD oracle.

    ``ns_error`` is ``||O^T O - I_r||_F`` on the rank-r subspace of the
    input, ``polar_error`` is ``||O - U_r V_r^T||_F``. The cosine arrays
    compare the input's rank-r left/right singular subspaces to the output's.
    """
    m = as_matrix(m, "m")
    out, degenerate = newton_schulz_flagged(m, cfg)
    src = svd_oracle(m)
    if degenerate or src.sigma[0] == 0.0:
        r = 0
    else:
        r = int(np.count_nonzero(src.sigma > rank_tol * src.sigma[0]))
    if r == 0:
        empty = np.zeros(0)
        return NsReport(out, (0.0, 0.0), 0.0, 0.0, 0, empty, empty, degenerate)
    res = svd_oracle(out)
    s = res.sigma[:r]
    ns_error = float(np.sqrt(np.sum((s**2 - 1.0) ** 2)))
    ur, vr = src.u[:, :r], src.v[:, :r]
    polar_error = frobenius_norm(out - ur @ vr.T)
    left = principal_cosines(ur, res.u[:, :r])
    right = principal_cosines(vr, res.v[:, :r])
    return NsReport(
        output=out,
        singular_band=(float(s.min()), float(s.max())),
        ns_error=ns_error,
        polar_error=polar_error,
        rank=r,
        left_cosines=left,
        right_cosines=right,
        degenerate=degenerate,
    )
