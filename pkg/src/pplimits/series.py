"""Series sampling of infinitely divisible laws and their paths.

A jump-size measure with tail H is sampled by mapping standard Poisson
arrivals through the generalized inverse: the i-th largest jump is
H_inv(arrival_i).  Sums of the jumps follow the infinitely divisible law
whose log-characteristic function integrates (e^{iux} - 1) against the
measure; attaching i.i.d. time marks to the jumps yields a nondecreasing
path on [0, 1].

Truncation is explicit: generation stops at ``point_floor`` or
``max_terms`` and the mean mass of the discarded jumps is reported (and
optionally added back, which trades a small deterministic shift for a
far cheaper floor).
"""

from __future__ import annotations

import warnings
from concurrent.futures import Executor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

from .levy import LevyMeasure
from .numerics import scalar
from .rng import derive_rng

__all__ = [
    "TruncationPolicy",
    "SeriesSample",
    "LevyPath",
    "SmallJumpMeanError",
    "poisson_arrivals",
    "series_points",
    "series_sum",
    "series_path",
    "centered_series_sum",
    "sample_sums",
    "sample_point_counts",
    "char_function",
    "uniform_marks",
    "fixed_marks",
]

_CHUNK = 4096  # replicates handled per vectorized inner batch


class SmallJumpMeanError(ValueError):
    """Raised when a sampler needs the small-jump mean finite and it is not."""


@dataclass(frozen=True)
class TruncationPolicy:
    """Stopping rule for the jump series.

    ``compensate`` adds the deterministic estimate of the discarded mass
    to every sum; off by default so the sampler stays unbiased in law up
    to a reported truncation error instead of silently shifting.
    """

    max_terms: int = 10_000
    point_floor: float = 1e-8
    compensate: bool = False

    def __post_init__(self):
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")
        if not self.point_floor >= 0:
            raise ValueError("point_floor must be >= 0")


DEFAULT_TRUNCATION = TruncationPolicy()


@dataclass(frozen=True)
class SeriesSample:
    points: np.ndarray  # nonincreasing positive jump sizes
    truncation_index: int
    truncation_bound: float  # estimated mean of the discarded mass

    @property
    def total(self) -> float:
        return float(self.points.sum())


@dataclass(frozen=True)
class LevyPath:
    """Cadlag nondecreasing path: jumps ``sizes`` at ``times`` in [0, 1]."""

    times: np.ndarray
    sizes: np.ndarray

    def __post_init__(self):
        order = np.argsort(self.times, kind="stable")
        object.__setattr__(self, "times", np.asarray(self.times)[order])
        object.__setattr__(self, "sizes", np.asarray(self.sizes)[order])
        object.__setattr__(self, "_csum", np.cumsum(self.sizes))

    def value(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.times, t, side="right")
        csum = np.concatenate(([0.0], self._csum))
        return csum[idx]

    @property
    def total(self) -> float:
        return float(self.sizes.sum())

    def grid(self, resolution: int = 256) -> tuple[np.ndarray, np.ndarray]:
        t = np.linspace(0.0, 1.0, resolution + 1)
        return t, self.value(t)


def uniform_marks(rng: np.random.Generator, size: int) -> np.ndarray:
    return rng.random(size)


def fixed_marks(t: float):
    if not 0.0 <= t <= 1.0:
        raise ValueError("mark must lie in [0, 1]")

    def _sample(rng: np.random.Generator, size: int) -> np.ndarray:
        return np.full(size, t)

    return _sample


# ---------------------------------------------------------------------------
# core generation
# ---------------------------------------------------------------------------


def poisson_arrivals(seed: int, count: int) -> np.ndarray:
    """Cumulative sums of i.i.d. unit exponentials from the seeded stream."""
    if count < 1:
        raise ValueError("count must be >= 1")
    return derive_rng(seed, 0, 0).standard_exponential(count).cumsum()


def _require_plain_sampling(measure: LevyMeasure) -> None:
    if not np.isfinite(measure.small_jump_mean()):
        raise SmallJumpMeanError(
            "the measure's small-jump mean (integral of x over (0,1]) is infinite; "
            "the plain series sum is not summable -- use the centered variant"
        )


def _arrival_block(rng, gamma_stop: float, max_terms: int) -> np.ndarray:
    """Arrivals up to the first one past gamma_stop, capped at max_terms."""
    guess = 32 if not np.isfinite(gamma_stop) else int(gamma_stop + 6.0 * np.sqrt(gamma_stop + 1.0) + 16)
    n = min(max_terms, max(guess, 8))
    arr = rng.standard_exponential(n).cumsum()
    while arr[-1] <= gamma_stop and arr.size < max_terms:
        n = min(max_terms - arr.size, arr.size)
        ext = arr[-1] + rng.standard_exponential(n).cumsum()
        arr = np.concatenate([arr, ext])
    return arr


def _retained_arrivals(rng, measure, trunc: TruncationPolicy) -> np.ndarray:
    if trunc.point_floor > 0:
        gamma_stop = scalar(measure.tail(np.asarray([trunc.point_floor])))
    else:
        gamma_stop = np.inf
    arr = _arrival_block(rng, gamma_stop, trunc.max_terms)
    keep = int(np.searchsorted(arr, gamma_stop, side="right"))
    return arr[: min(keep, trunc.max_terms)]


def series_points(
    measure: LevyMeasure,
    seed: int,
    truncation: TruncationPolicy = DEFAULT_TRUNCATION,
    replicate: int = 0,
) -> SeriesSample:
    """One realization of the (nonincreasing) jump sequence."""
    _require_plain_sampling(measure)
    rng = derive_rng(seed, replicate, 0)
    gammas = _retained_arrivals(rng, measure, truncation)
    points = measure.tail_inverse_vec(gammas) if gammas.size else np.empty(0)
    if points.size and not np.all(np.isfinite(points)):
        raise ValueError("tail inverse produced nonfinite jump sizes; check the measure's grid")
    bound = float(measure.mass_below(np.asarray([points[-1] if points.size else truncation.point_floor]))[0])
    return SeriesSample(points=points, truncation_index=points.size, truncation_bound=bound)


def series_sum(
    measure: LevyMeasure,
    seed: int,
    truncation: TruncationPolicy = DEFAULT_TRUNCATION,
    replicate: int = 0,
) -> float:
    sample = series_points(measure, seed, truncation, replicate)
    total = sample.total
    if truncation.compensate:
        total += sample.truncation_bound
    return total


def series_path(
    measure: LevyMeasure,
    mark_sampler,
    seed: int,
    truncation: TruncationPolicy = DEFAULT_TRUNCATION,
    replicate: int = 0,
) -> LevyPath:
    """Attach i.i.d. [0,1] marks to the jump sizes of the same point stream.

    The path total equals ``series_sum`` for identical (seed, replicate).
    """
    sample = series_points(measure, seed, truncation, replicate)
    marks = mark_sampler(derive_rng(seed, replicate, 1), sample.points.size)
    marks = np.asarray(marks, dtype=float)
    if marks.size and (marks.min() < 0.0 or marks.max() > 1.0):
        raise ValueError("mark sampler must produce values in [0, 1]")
    return LevyPath(times=marks, sizes=sample.points)


@lru_cache(maxsize=32)
def _centering_cumsum(measure: LevyMeasure, count: int) -> np.ndarray:
    c = measure.centering_constants(count)
    return np.concatenate(([0.0], np.cumsum(c)))


def centered_series_sum(
    measure: LevyMeasure,
    seed: int,
    truncation: TruncationPolicy = DEFAULT_TRUNCATION,
    replicate: int = 0,
) -> float:
    """Sum of (jump_i - centering_i) over the retained terms.

    Defined for every valid measure, including those with infinite
    small-jump mean where the plain sum diverges.
    """
    rng = derive_rng(seed, replicate, 0)
    gammas = _retained_arrivals(rng, measure, truncation)
    points = measure.tail_inverse_vec(gammas) if gammas.size else np.empty(0)
    csum = _centering_cumsum(measure, truncation.max_terms)
    return float(points.sum() - csum[points.size])


# ---------------------------------------------------------------------------
# batched replicate sampling
# ---------------------------------------------------------------------------


def _simulate_chunk(measure, seed, r0, r1, trunc, centered):
    if trunc.point_floor > 0:
        gamma_stop = scalar(measure.tail(np.asarray([trunc.point_floor])))
    else:
        gamma_stop = np.inf
    gamma_rows = []
    lengths = np.empty(r1 - r0, dtype=np.int64)
    for j, r in enumerate(range(r0, r1)):
        rng = derive_rng(seed, r, 0)
        arr = _arrival_block(rng, gamma_stop, trunc.max_terms)
        keep = min(int(np.searchsorted(arr, gamma_stop, side="right")), trunc.max_terms)
        lengths[j] = keep
        gamma_rows.append(arr[:keep])
    flat = np.concatenate(gamma_rows) if gamma_rows else np.empty(0)
    points = measure.tail_inverse_vec(flat) if flat.size else np.empty(0)
    if points.size and not np.all(np.isfinite(points)):
        raise ValueError("tail inverse produced nonfinite jump sizes; check the measure's grid")
    starts = np.concatenate(([0], np.cumsum(lengths)))[:-1]
    sums = np.zeros(r1 - r0)
    nonempty = lengths > 0
    if flat.size:
        row_sums = np.add.reduceat(points, starts[nonempty])
        sums[nonempty] = row_sums
    if centered:
        csum = _centering_cumsum(measure, trunc.max_terms)
        sums -= csum[lengths]
    elif trunc.compensate:
        last = np.full(r1 - r0, trunc.point_floor)
        if flat.size:
            last_idx = starts[nonempty] + lengths[nonempty] - 1
            last[nonempty] = points[last_idx]
        sums += measure.mass_below(last)
    return sums, lengths


def _map_chunks(fn, replicates: int, executor: Executor | None):
    edges = list(range(0, replicates, _CHUNK)) + [replicates]
    ranges = list(zip(edges[:-1], edges[1:]))
    if executor is None:
        return [fn(r0, r1) for r0, r1 in ranges]
    return list(executor.map(lambda rr: fn(*rr), ranges))


def sample_sums(
    measure: LevyMeasure,
    seed: int,
    replicates: int,
    truncation: TruncationPolicy = DEFAULT_TRUNCATION,
    centered: bool = False,
    executor: Executor | None = None,
) -> np.ndarray:
    """Replicate vector of series sums.

    Replicate r draws from a stream derived from (seed, r), so the result
    is independent of chunking and worker count.
    """
    if not centered:
        _require_plain_sampling(measure)
    out = _map_chunks(
        lambda r0, r1: _simulate_chunk(measure, seed, r0, r1, truncation, centered)[0],
        replicates,
        executor,
    )
    return np.concatenate(out) if out else np.empty(0)


def sample_point_counts(
    measure: LevyMeasure,
    seed: int,
    replicates: int,
    truncation: TruncationPolicy = DEFAULT_TRUNCATION,
    executor: Executor | None = None,
) -> np.ndarray:
    """Number of retained jumps per replicate (compound-Poisson counts for
    finite measures)."""
    out = _map_chunks(
        lambda r0, r1: _simulate_chunk(measure, seed, r0, r1, truncation, False)[1],
        replicates,
        executor,
    )
    return np.concatenate(out) if out else np.empty(0, dtype=np.int64)


# ---------------------------------------------------------------------------
# characteristic function
# ---------------------------------------------------------------------------


def char_function(measure: LevyMeasure, u: float, max_abserr: float = 1e-6) -> complex:
    """exp of the integral of (e^{iux} - 1) against the measure.

    Integration by parts moves the oscillation onto the tail:
    I(u) = i*u * int_0^inf e^{iux} H(x) dx, evaluated with weighted
    (oscillatory) quadrature on [0, 1] plus a Fourier integral on
    [1, inf) with series acceleration.
    """
    if u == 0.0:
        return 1.0 + 0.0j
    if not np.isfinite(measure.small_jump_mean()):
        raise SmallJumpMeanError(
            "characteristic-function evaluation requires a finite small-jump mean"
        )
    if u < 0:
        return np.conj(char_function(measure, -u, max_abserr))

    h = lambda x: scalar(measure.tail(np.asarray([x])))
    parts = {}
    err_total = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for trig in ("cos", "sin"):
            near, e1 = integrate.quad(h, 0.0, 1.0, weight=trig, wvar=u, limit=400)
            far, e2 = integrate.quad(h, 1.0, np.inf, weight=trig, wvar=u, limit=400)
            parts[trig] = near + far
            err_total += e1 + e2
    if err_total > max_abserr:
        raise RuntimeError(
            f"oscillatory quadrature did not converge: achieved error {err_total:.3g} exceeds {max_abserr:.3g}"
        )
    exponent = complex(-u * parts["sin"], u * parts["cos"])
    return complex(np.exp(exponent))
