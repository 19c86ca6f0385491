"""Perron root of a nonnegative matrix by power iteration with
Collatz-Wielandt brackets."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NoConvergence

MAX_ITER = 100_000


@dataclass(frozen=True)
class PerronData:
    """``rho`` with a certified bracket ``[lower, upper]`` and Perron vectors.

    The bracket comes from ``min_i (Bx)_i / x_i <= rho(B) <= max_i (Bx)_i / x_i``
    for any positive ``x`` and ``B = M + I``.
    """

    rho: float
    lower: float
    upper: float
    right: np.ndarray
    left: np.ndarray
    iterations: int


def _iterate(B: np.ndarray, tol: float, max_iter: int):
    x = np.ones(B.shape[0])
    lo, hi = 0.0, math.inf
    for it in range(1, max_iter + 1):
        y = B @ x
        ratios = y / x
        lo, hi = float(ratios.min()), float(ratios.max())
        x = y / np.linalg.norm(y)
        x = np.maximum(x, 1e-300)
        if hi - lo <= tol * hi:
            return x, lo, hi, it
    raise NoConvergence("power iteration hit the iteration cap", hi - lo)


def perron(M, tol: float = 1e-14, max_iter: int = MAX_ITER) -> PerronData:
    """Perron root and left/right vectors of a nonnegative square matrix."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("matrix must be square")
    if (M < 0).any():
        raise ValueError("matrix must be nonnegative")
    scale = float(M.max()) if M.size else 0.0
    if scale == 0.0:
        n = M.shape[0]
        return PerronData(0.0, 0.0, 0.0, np.ones(n) / math.sqrt(n), np.ones(n) / math.sqrt(n), 0)
    A = M / scale
    eye = np.eye(A.shape[0])
    r, lo, hi, it = _iterate(A + eye, tol, max_iter)
    l, _, _, _ = _iterate(A.T + eye, tol, max_iter)
    rho_lo, rho_hi = (lo - 1.0) * scale, (hi - 1.0) * scale
    return PerronData(0.5 * (rho_lo + rho_hi), rho_lo, rho_hi, r, l, it)
