"""Shared numerical helpers: classified improper quadrature, monotone
inversion, and batched Monte Carlo standard errors.

Integrals against jump-size tails routinely have power or exponential
singularities at 0 and slow decay at infinity, and the toolkit has to
*classify* divergent integrals (report +inf) rather than crash or return
garbage.  ``shell_quad`` integrates over dyadic shells toward the improper
endpoint and declares divergence when the running total passes a cap
without the shell contributions dying out.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

__all__ = [
    "QuadResult",
    "scalar",
    "shell_quad",
    "quad_01",
    "vec_bisect_decreasing",
    "batch_mean_se",
    "gauss_legendre_nodes",
]


def scalar(v) -> float:
    """First element of an array-like as a plain float."""
    return float(np.asarray(v).reshape(-1)[0])

#: an integral whose partial sums pass this value without converging is
#: reported as +inf
DEFAULT_DIVERGENCE_CAP = 1e12


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float
    diverged: bool = False

    @property
    def finite(self) -> bool:
        return not self.diverged and np.isfinite(self.value)


def _panel(fn, a, b) -> tuple[float, float]:
    # roundoff warnings near divergent endpoints are expected; the shell
    # accumulator does its own convergence/divergence classification
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(fn, a, b, limit=200)
    return val, err


def shell_quad(
    fn: Callable[[float], float],
    a: float,
    b: float,
    *,
    singular_at: str = "none",
    rtol: float = 1e-9,
    atol: float = 1e-12,
    cap: float = DEFAULT_DIVERGENCE_CAP,
    max_shells: int = 200,
) -> QuadResult:
    """Integrate ``fn`` over (a, b) with a possibly improper endpoint.

    ``singular_at`` is "lower" (a may be 0 with a singularity there),
    "upper" (b may be inf), or "none".  The improper end is approached
    through dyadic shells; accumulation stops when a shell contributes
    less than the tolerance, and the integral is classified divergent
    when the running absolute total exceeds ``cap`` first.
    """
    if singular_at == "none":
        val, err = _panel(fn, a, b)
        return QuadResult(val, err)

    total = 0.0
    total_err = 0.0
    if singular_at == "lower":
        # fixed outer part, then shells (b0/2^k, b0/2^{k-1}] shrinking to a=0
        if not a == 0.0:
            raise ValueError("lower-singular quadrature expects a == 0")
        hi = b
        lo = b / 2.0
        for _ in range(max_shells):
            val, err = _panel(fn, lo, hi)
            total += val
            total_err += err
            if abs(total) > cap:
                return QuadResult(np.inf if total > 0 else -np.inf, total_err, diverged=True)
            if abs(val) < atol + rtol * abs(total):
                return QuadResult(total, total_err)
            hi = lo
            lo = lo / 2.0
        return QuadResult(np.inf if total > 0 else -np.inf, total_err, diverged=True)

    if singular_at == "upper":
        lo = a
        hi = 2.0 * max(a, 1.0)
        for _ in range(max_shells):
            val, err = _panel(fn, lo, hi)
            total += val
            total_err += err
            if abs(total) > cap:
                return QuadResult(np.inf if total > 0 else -np.inf, total_err, diverged=True)
            if abs(val) < atol + rtol * abs(total):
                return QuadResult(total, total_err)
            lo = hi
            hi = hi * 2.0
        return QuadResult(np.inf if total > 0 else -np.inf, total_err, diverged=True)

    raise ValueError(f"unknown singular_at: {singular_at!r}")


def quad_01(fn: Callable[[float], float], **kw) -> QuadResult:
    """Integral over (0, 1] with a possible singularity at 0."""
    return shell_quad(fn, 0.0, 1.0, singular_at="lower", **kw)


def vec_bisect_decreasing(
    fn: Callable[[np.ndarray], np.ndarray],
    y: np.ndarray,
    lo: float,
    hi: float,
    iters: int = 60,
) -> np.ndarray:
    """Vectorized geometric bisection for the generalized inverse of a
    nonincreasing positive function: smallest x with fn(x) <= y.

    Assumes fn(lo) >= y >= fn(hi) elementwise; callers clamp beforehand.
    """
    y = np.asarray(y, dtype=float)
    lo_a = np.full(y.shape, lo, dtype=float)
    hi_a = np.full(y.shape, hi, dtype=float)
    for _ in range(iters):
        mid = np.sqrt(lo_a * hi_a)
        above = fn(mid) > y  # tail still above level -> inverse lies right of mid
        lo_a = np.where(above, mid, lo_a)
        hi_a = np.where(above, hi_a, mid)
    return np.sqrt(lo_a * hi_a)


def batch_mean_se(values: np.ndarray, batches: int = 100) -> tuple[float, float]:
    """Mean and batched standard error of a replicate vector.

    Splits the replicates into up to ``batches`` contiguous batches and
    reports std(batch means)/sqrt(B); for i.i.d. replicates this agrees
    with the plain SE while staying honest for mildly correlated streams.
    """
    v = np.asarray(values, dtype=float).ravel()
    n = v.size
    if n < 2:
        return (float(v.mean()) if n else np.nan, np.nan)
    b = min(batches, n)
    cut = (n // b) * b
    means = v[:cut].reshape(b, -1).mean(axis=1)
    se = means.std(ddof=1) / np.sqrt(b)
    return float(v.mean()), float(se)


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gauss_legendre_nodes(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes/weights on [0, 1], cached per order."""
    if order not in _GL_CACHE:
        x, w = np.polynomial.legendre.leggauss(order)
        _GL_CACHE[order] = ((x + 1.0) / 2.0, w / 2.0)
    return _GL_CACHE[order]
