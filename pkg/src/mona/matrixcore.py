"""Dense matrix helpers, a one-sided Jacobi SVD used as a test oracle, and a
bfloat16 storage codec.

Matrices are plain 2-D ``numpy.ndarray`` objects in float64. Nothing here
mutates its arguments.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np


class ShapeError(ValueError):
    """Raised when operands have incompatible shapes."""


class SvdConvergenceError(RuntimeError):
    def __init__(self, residual: float, sweeps: int):
        super().__init__(
            f"Jacobi SVD did not converge after {sweeps} sweeps "
            f"(off-diagonal residual {residual:.3e})"
        )
        self.residual = residual
        self.sweeps = sweeps


def as_matrix(x, name: str = "matrix") -> np.ndarray:
    """Return ``x`` as a float64 2-D array (1-D input becomes a column)."""
    a = np.asarray(x, dtype=np.float64)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    if a.ndim != 2 or a.size == 0:
        raise ShapeError(f"{name} must be a non-empty 2-D array, got shape {a.shape}")
    return a


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def frobenius_norm(a: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    return float(np.linalg.norm(a.ravel()))


@dataclass(frozen=True)
class SvdResult:
    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.sigma) @ self.v.T


def _complete_basis(q: np.ndarray, filled: np.ndarray) -> np.ndarray:
    """Replace the columns of ``q`` not marked in ``filled`` with unit vectors
    orthogonal to everything already present (Gram-Schmidt on e_i)."""
    q = q.copy()
    m = q.shape[0]
    have = [q[:, j] for j in range(q.shape[1]) if filled[j]]
    candidates = iter(range(m))
    for j in range(q.shape[1]):
        if filled[j]:
            continue
        while True:
            e = np.zeros(m)
            e[next(candidates)] = 1.0
            for _ in range(2):
                for h in have:
                    e -= (h @ e) * h
            n = np.linalg.norm(e)
            if n > 1e-8:
                e /= n
                break
        q[:, j] = e
        have.append(e)
    return q


def svd_oracle(a: np.ndarray, tol: float = 1e-15, max_sweeps: int = 80) -> SvdResult:
    """Thin SVD by one-sided (Hestenes) Jacobi rotations.

    Slow and accurate; intended for matrices up to a few hundred rows in
    tests, never for the optimizer hot path. Singular values come back in
    descending order and each column of ``u`` has its first nonzero entry
    non-negative.
    """
    a = as_matrix(a, "a")
    m, n = a.shape
    if max(m, n) > 512:
        raise ShapeError(f"svd_oracle is limited to 512x512, got {a.shape}")
    transposed = m < n
    work = a.T.copy() if transposed else a.copy()
    rows, cols = work.shape
    # unit max entry keeps the Gram products clear of underflow and overflow
    magnitude = float(np.max(np.abs(work)))
    if magnitude > 0:
        work /= magnitude
    v = np.eye(cols)
    # columns below round-off of the whole matrix are numerically zero; rotating
    # them only chases noise and never converges on rank-deficient inputs
    negligible = (np.finfo(float).eps * max(rows, cols)) ** 2 * float(np.sum(work * work))

    residual = 0.0
    for sweep in range(1, max_sweeps + 1):
        residual = 0.0
        for p in range(cols - 1):
            for q in range(p + 1, cols):
                wp = work[:, p]
                wq = work[:, q]
                alpha = wp @ wp
                beta = wq @ wq
                gamma = wp @ wq
                if alpha <= negligible or beta <= negligible:
                    continue
                off = abs(gamma) / (math.sqrt(alpha) * math.sqrt(beta))
                residual = max(residual, off)
                if off <= tol:
                    continue
                zeta = (beta - alpha) / (2.0 * gamma)
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = c * t
                new_p = c * wp - s * wq
                new_q = s * wp + c * wq
                work[:, p] = new_p
                work[:, q] = new_q
                vp = v[:, p].copy()
                v[:, p] = c * vp - s * v[:, q]
                v[:, q] = s * vp + c * v[:, q]
        if residual <= tol:
            break
    else:
        if residual > 1e-12:
            raise SvdConvergenceError(residual, max_sweeps)

    sigma = np.linalg.norm(work, axis=0)
    order = np.argsort(-sigma, kind="stable")
    sigma = sigma[order]
    work = work[:, order]
    v = v[:, order]

    scale = sigma[0] if sigma.size and sigma[0] > 0 else 1.0
    nonzero = sigma > scale * 1e-14 * max(rows, cols)
    u = np.zeros((rows, cols))
    u[:, nonzero] = work[:, nonzero] / sigma[nonzero]
    sigma = np.where(nonzero, sigma, 0.0) * (magnitude if magnitude > 0 else 1.0)
    if not nonzero.all():
        u = _complete_basis(u, nonzero)

    if transposed:
        u, v = v, u

    for j in range(u.shape[1]):
        col = u[:, j]
        first = np.flatnonzero(np.abs(col) > 1e-300)
        if first.size and col[first[0]] < 0:
            u[:, j] = -col
            v[:, j] = -v[:, j]
    return SvdResult(u=u, sigma=sigma, v=v)


# --- bfloat16 codec -------------------------------------------------------

@dataclass(frozen=True)
class Bf16Value:
    bits: int

    def decode(self) -> float:
        return struct.unpack("<f", struct.pack("<I", (self.bits & 0xFFFF) << 16))[0]


def bf16_encode(x) -> np.ndarray:
    """Round float values to bfloat16 bit patterns (``uint16`` array).

    The value is first cast to float32; the 32-bit pattern is then rounded to
    its upper 16 bits with round-to-nearest-even. NaN stays NaN (quiet),
    overflow rounds to the infinity pattern.
    """
    with np.errstate(over="ignore", invalid="ignore"):
        f32 = np.asarray(x, dtype=np.float32)
    bits = f32.view(np.uint32).astype(np.uint64)
    lsb = (bits >> 16) & 1
    rounded = ((bits + 0x7FFF + lsb) >> 16).astype(np.uint16)
    nan = np.isnan(f32)
    if nan.any():
        rounded = np.where(nan, ((bits >> 16) | 0x0040).astype(np.uint16), rounded)
    return rounded.astype(np.uint16)


def bf16_decode(bits) -> np.ndarray:
    b = np.asarray(bits, dtype=np.uint16)
    return (b.astype(np.uint32) << 16).view(np.float32).astype(np.float64)


def bf16_round(x: float) -> Bf16Value:
    return Bf16Value(int(bf16_encode(np.float64(x))))


def bf16_quantize(x) -> np.ndarray:
    """Values after a bfloat16 round trip, as float64."""
    return bf16_decode(bf16_encode(x))
