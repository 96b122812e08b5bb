"""Stationary heavy-tailed triangular-array row generators.

Each model produces, per (n, seed), one strictly stationary row of length
n, already divided by the Pareto scaling a_n = n**(1/alpha) so that row
entries above a fixed level occur at rate ~ 1/n.  The noise law is exact
Pareto (tail x**-alpha on [1, inf)), which keeps every negligibility and
weak-dependence target in closed form for the verification suite.

Dependence structures on a row:

* ``IidHeavyTail``            independent entries
* ``MDependentMovingSum``     moving sum over m+1 noises (m-dependent)
* ``LinearProcess``           geometric-coefficient moving average, with
                              optional i.i.d. per-position random scale
* ``StochasticVolatility``    positive volatility sequence times i.i.d.
                              noise (volatility m-dependent or log-AR(1))
* ``AssociatedGaussian``      monotone Pareto transform of a stationary
                              AR(1) Gaussian with nonnegative correlation
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import signal, special

from .cluster import PointConfiguration
from .levy import MarkDistribution
from .rng import derive_rng

__all__ = [
    "pareto_scaling",
    "ArrayModel",
    "IidHeavyTail",
    "MDependentMovingSum",
    "LinearProcess",
    "StochasticVolatility",
    "MovingMaxVolatility",
    "LogGaussianVolatility",
    "AssociatedGaussian",
    "generate_row",
    "partial_sum",
    "partial_sum_split",
    "exceedance_points",
]

COEFF_MASS_TOL = 1e-8  # remaining alpha-moment mass allowed past the cutoff


def pareto_scaling(alpha: float, n: int) -> float:
    """a_n with n * P(noise > a_n) = 1 for the exact Pareto noise."""
    if not 0.0 < alpha < 2.0:
        raise ValueError("tail index must lie in (0, 2)")
    if n < 1:
        raise ValueError("n must be >= 1")
    return float(n) ** (1.0 / alpha)


def _pareto(rng: np.random.Generator, alpha: float, size: int) -> np.ndarray:
    # tail x**-alpha on [1, inf); 1-U stays in (0, 1]
    return (1.0 - rng.random(size)) ** (-1.0 / alpha)


def _ar1_gaussian(rng: np.random.Generator, r: float, n: int) -> np.ndarray:
    """Stationary AR(1) with N(0,1) marginals and correlation r**lag."""
    if r == 0.0:
        return rng.standard_normal(n)
    drive = np.empty(n)
    drive[0] = rng.standard_normal()  # exact stationary start
    drive[1:] = np.sqrt(1.0 - r * r) * rng.standard_normal(n - 1)
    return signal.lfilter([1.0], [1.0, -r], drive)


class ArrayModel:
    """Base: per-(n, seed) stationary row generator with tail metadata."""

    alpha: float

    @property
    def dependence_order(self) -> int | None:
        """m for m-dependent rows, None when dependence has no finite range."""
        return None

    def scaling(self, n: int) -> float:
        return pareto_scaling(self.alpha, n)

    def mixing_profile(self) -> Callable[[int], float]:
        """Nonincreasing [0,1]-valued bound on the row mixing coefficients."""
        m = self.dependence_order
        if m is None:
            raise NotImplementedError
        if m == 0:
            return lambda j: 0.0
        return lambda j: 0.25 if j <= m else 0.0

    def _raw_row(self, length: int, rng: np.random.Generator) -> np.ndarray:
        """Unscaled stationary row of the given length."""
        raise NotImplementedError

    def sample_row(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return self._raw_row(n, rng) / self.scaling(n)

    def sample_prefix(self, length: int, n: int, rng: np.random.Generator) -> np.ndarray:
        """First ``length`` coordinates of an n-row (scaled by a_n).

        Stationarity makes this an exact prefix in law without paying for
        the full row.
        """
        if length > n:
            raise ValueError("prefix length cannot exceed n")
        return self._raw_row(length, rng) / self.scaling(n)


@dataclass(frozen=True)
class IidHeavyTail(ArrayModel):
    alpha: float

    def __post_init__(self):
        pareto_scaling(self.alpha, 1)

    @property
    def dependence_order(self):
        return 0

    def _raw_row(self, length, rng):
        return _pareto(rng, self.alpha, length)


@dataclass(frozen=True)
class MDependentMovingSum(ArrayModel):
    """Moving sum of m+1 consecutive noises; entries m apart share nothing."""

    alpha: float
    m: int

    def __post_init__(self):
        pareto_scaling(self.alpha, 1)
        if self.m < 1:
            raise ValueError("m must be >= 1")

    @property
    def dependence_order(self):
        return self.m

    def _raw_row(self, length, rng):
        z = _pareto(rng, self.alpha, length + self.m)
        window = np.ones(self.m + 1)
        return np.convolve(z, window, mode="valid")


@dataclass(frozen=True)
class LinearProcess(ArrayModel):
    """Moving average with coefficients scale_i * theta**j.

    ``row_scale`` draws an i.i.d. positive scale per row position
    (coefficient sequences i.i.d. across positions, independent of the
    noise); None means constant coefficients theta**j.  The series is cut
    once the remaining alpha-moment coefficient mass drops below 1e-8; a
    ``series_cutoff`` too small for that is a configuration error.
    """

    alpha: float
    theta: float
    series_cutoff: int = 64
    row_scale: MarkDistribution | None = None

    def __post_init__(self):
        pareto_scaling(self.alpha, 1)
        if not 0.0 <= self.theta < 1.0:
            raise ValueError("theta must lie in [0, 1)")
        if self.series_cutoff < 1:
            raise ValueError("series_cutoff must be >= 1")
        needed = self._terms_needed()
        if needed > self.series_cutoff:
            raise ValueError(
                f"series_cutoff={self.series_cutoff} leaves coefficient mass above {COEFF_MASS_TOL:g}; "
                f"need at least {needed} terms for theta={self.theta}, alpha={self.alpha}"
            )

    def _terms_needed(self) -> int:
        if self.theta == 0.0:
            return 1
        # remaining mass fraction after J terms is theta**(alpha*J)
        return int(np.ceil(np.log(COEFF_MASS_TOL) / (self.alpha * np.log(self.theta)))) + 1

    @property
    def coefficients(self) -> np.ndarray:
        return self.theta ** np.arange(self._terms_needed())

    @property
    def mark_sum(self) -> float:
        """Deterministic part of the limiting cluster sum, sum theta**j."""
        return 1.0 / (1.0 - self.theta)

    def limit_tail_scale(self) -> float:
        """Tail scale of the partial-sum limit: E[(scale/(1-theta))**alpha]."""
        base = self.mark_sum**self.alpha
        if self.row_scale is None:
            return base
        return base * self.row_scale.alpha_moment(self.alpha)

    def _raw_row(self, length, rng):
        coeffs = self.coefficients
        z = _pareto(rng, self.alpha, length + coeffs.size - 1)
        row = np.convolve(z, coeffs, mode="valid")
        if self.row_scale is not None:
            row = row * self.row_scale.sample(rng, length)
        return row


class VolatilityLaw:
    def sample_path(self, n: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    @property
    def dependence_order(self) -> int | None:
        raise NotImplementedError

    def mixing_profile(self) -> Callable[[int], float]:
        raise NotImplementedError


@dataclass(frozen=True)
class MovingMaxVolatility(VolatilityLaw):
    """Moving maximum of m+1 i.i.d. uniforms on [lo, hi]; m-dependent."""

    m: int
    lo: float = 0.5
    hi: float = 1.5

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if not 0.0 < self.lo < self.hi:
            raise ValueError("need 0 < lo < hi")

    @property
    def dependence_order(self):
        return self.m

    def mixing_profile(self):
        return lambda j: 0.25 if j <= self.m else 0.0

    def sample_path(self, n, rng):
        base = rng.uniform(self.lo, self.hi, n + self.m)
        view = np.lib.stride_tricks.sliding_window_view(base, self.m + 1)
        return view.max(axis=1)


@dataclass(frozen=True)
class LogGaussianVolatility(VolatilityLaw):
    """exp(sigma * AR(1) Gaussian); covariance decays geometrically, so the
    block-coupling bound decays like r**m."""

    r: float
    sigma: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.r < 1.0:
            raise ValueError("r must lie in [0, 1)")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")

    @property
    def dependence_order(self):
        return None

    def mixing_profile(self):
        r = self.r
        return lambda j: min(1.0, r**j) if r > 0 else 0.0

    def sample_path(self, n, rng):
        return np.exp(self.sigma * _ar1_gaussian(rng, self.r, n))


@dataclass(frozen=True)
class StochasticVolatility(ArrayModel):
    """Row = volatility path times i.i.d. Pareto noise, scaled by a_n.

    The noise is drawn independently of the volatility path; the row
    inherits exactly the volatility's dependence structure.
    """

    alpha: float
    volatility: VolatilityLaw

    def __post_init__(self):
        pareto_scaling(self.alpha, 1)

    @property
    def dependence_order(self):
        return self.volatility.dependence_order

    def mixing_profile(self):
        return self.volatility.mixing_profile()

    def _raw_row(self, length, rng):
        sigma = self.volatility.sample_path(length, rng)
        z = _pareto(rng, self.alpha, length)
        return sigma * z


@dataclass(frozen=True)
class AssociatedGaussian(ArrayModel):
    """Coordinatewise-increasing Pareto transform of a positively
    correlated stationary Gaussian AR(1); the row is associated and has
    exact Pareto marginals."""

    alpha: float
    r: float

    def __post_init__(self):
        pareto_scaling(self.alpha, 1)
        if not 0.0 <= self.r < 1.0:
            raise ValueError("correlation must lie in [0, 1)")

    @property
    def dependence_order(self):
        return 0 if self.r == 0.0 else None

    def mixing_profile(self):
        r = self.r
        return lambda j: min(1.0, r**j) if r > 0 else 0.0

    def gaussian_lag_correlation(self, lag: int) -> float:
        return self.r**lag

    def _raw_row(self, length, rng):
        g = _ar1_gaussian(rng, self.r, length)
        u = special.ndtr(g)  # uniform marginals, increasing in g
        return np.maximum(1.0 - u, 1e-300) ** (-1.0 / self.alpha)


# ---------------------------------------------------------------------------
# row-level operations
# ---------------------------------------------------------------------------


def generate_row(model: ArrayModel, n: int, seed: int, replicate: int = 0) -> np.ndarray:
    """One stationary row, deterministic per (model, n, seed, replicate)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return model.sample_row(n, derive_rng(seed, replicate, 0))


def partial_sum(row: np.ndarray) -> float:
    return float(np.sum(row))


def partial_sum_split(row: np.ndarray, eps: float) -> tuple[float, float]:
    """Exact decomposition (sum above eps, sum at or below eps)."""
    row = np.asarray(row, dtype=float)
    above = float(row[row > eps].sum())
    below = float(row[row <= eps].sum())
    return above, below


def exceedance_points(row: np.ndarray, window_floor: float) -> PointConfiguration:
    """Row entries with modulus above the floor, as a point configuration."""
    if not window_floor > 0:
        raise ValueError("window floor must be positive")
    row = np.asarray(row, dtype=float)
    return PointConfiguration(points=row[np.abs(row) > window_floor], window_floor=window_floor)
