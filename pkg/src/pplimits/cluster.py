"""Poisson, cluster, and product-marked point processes on windows
bounded away from 0.

Two families of center-marked processes are provided:

* ``ClusterModel`` -- i.i.d. finite mark configurations (every mark
  bounded by 1 in modulus) scattered around Poisson centers; the point
  process is the superposition of center*mark.
* ``ProductModel`` -- one random positive factor per center (the factor
  law may be unbounded); the point process consists of the products.

Summing each cluster (or taking the single product) collapses either
model to a Poisson process of per-center sums, which is how the
heavy-tail partial-sum limits are simulated and cross-checked.

Laplace functionals come in two independent routes on purpose: a Monte
Carlo route over realizations and an exact route that enumerates the
mark law and integrates against the center intensity in tail
coordinates.  The tests and the acceptance suite compare the two.
"""

from __future__ import annotations

from concurrent.futures import Executor
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .levy import MarkDistribution, RadonIntensity
from .numerics import batch_mean_se, scalar, shell_quad
from .rng import derive_rng

__all__ = [
    "PointConfiguration",
    "ClusterLaw",
    "DeterministicCluster",
    "GeometricCluster",
    "EmpiricalClusters",
    "ClusterModel",
    "ProductModel",
    "ClusterRealization",
    "SummedProcess",
    "LaplaceEstimate",
    "sample_poisson_points",
    "sample_cluster_points",
    "cluster_realization",
    "sum_clusters",
    "laplace_mc",
    "laplace_analytic",
    "cluster_point_sampler",
    "poisson_point_sampler",
    "law_max_abs",
    "law_max_sum",
    "sum_mark_distribution",
]

CLUSTER_SUM_CAP = 1e12


@dataclass(frozen=True)
class PointConfiguration:
    """Finite multiset of nonzero points observed on {|x| > window_floor}."""

    points: np.ndarray
    window_floor: float

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        object.__setattr__(self, "points", pts)
        if pts.size and np.min(np.abs(pts)) <= self.window_floor:
            raise ValueError("every point must lie outside the window floor")

    def count(self, lo: float, hi: float = np.inf) -> int:
        """Number of points with modulus in (lo, hi]."""
        m = np.abs(self.points)
        return int(np.count_nonzero((m > lo) & (m <= hi)))

    def integrate(self, f) -> float:
        """Sum of f over the points."""
        return float(np.sum(f(self.points))) if self.points.size else 0.0


# ---------------------------------------------------------------------------
# cluster laws (finite configurations with |mark| <= 1)
# ---------------------------------------------------------------------------


class ClusterLaw:
    max_abs: float  # sup of |mark|; must be <= 1
    max_sum: float  # sup of sum of marks over a cluster

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def configurations(self) -> list[tuple[float, np.ndarray]]:
        """(probability, marks) pairs; exact support for analytic formulas."""
        raise NotImplementedError


def _check_marks(marks: np.ndarray) -> np.ndarray:
    marks = np.asarray(marks, dtype=float)
    if marks.size and np.max(np.abs(marks)) > 1.0 + 1e-12:
        raise ValueError("cluster marks must be bounded by 1 in modulus")
    if marks.size and np.abs(marks).sum() > CLUSTER_SUM_CAP:
        raise ValueError("cluster is not summable: running mark sum exceeds the cap")
    return marks


@dataclass(frozen=True)
class DeterministicCluster(ClusterLaw):
    marks: tuple[float, ...]

    def __post_init__(self):
        m = _check_marks(np.asarray(self.marks))
        object.__setattr__(self, "marks", tuple(m))

    @property
    def max_abs(self):
        return max((abs(q) for q in self.marks), default=0.0)

    @property
    def max_sum(self):
        return float(sum(self.marks))

    def sample(self, rng):
        return np.asarray(self.marks)

    def configurations(self):
        return [(1.0, np.asarray(self.marks))]


@dataclass(frozen=True)
class GeometricCluster(ClusterLaw):
    """Deterministic geometric marks theta**j, truncated below ``floor``."""

    theta: float
    floor: float = 1e-8

    def __post_init__(self):
        if not 0.0 <= self.theta < 1.0:
            raise ValueError("theta must lie in [0, 1)")
        if self.theta > 0:
            count = int(np.floor(np.log(self.floor) / np.log(self.theta))) + 1
        else:
            count = 1
        object.__setattr__(self, "_marks", self.theta ** np.arange(max(count, 1)))

    @property
    def max_abs(self):
        return 1.0

    @property
    def max_sum(self):
        return float(self._marks.sum())

    def sample(self, rng):
        return self._marks

    def configurations(self):
        return [(1.0, self._marks)]


@dataclass(frozen=True)
class EmpiricalClusters(ClusterLaw):
    """Uniform pick from a finite list of configurations (e.g. from file)."""

    clusters: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        if not self.clusters:
            raise ValueError("need at least one cluster")
        cleaned = tuple(tuple(_check_marks(np.asarray(c))) for c in self.clusters)
        object.__setattr__(self, "clusters", cleaned)

    @property
    def max_abs(self):
        return max((max(map(abs, c), default=0.0) for c in self.clusters))

    @property
    def max_sum(self):
        return max(sum(c) for c in self.clusters)

    def sample(self, rng):
        k = int(rng.integers(0, len(self.clusters)))
        return np.asarray(self.clusters[k])

    def configurations(self):
        p = 1.0 / len(self.clusters)
        return [(p, np.asarray(c)) for c in self.clusters]


# ---------------------------------------------------------------------------
# models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClusterModel:
    intensity: RadonIntensity
    cluster_law: ClusterLaw

    def __post_init__(self):
        if self.cluster_law.max_abs > 1.0 + 1e-12:
            raise ValueError("cluster law emits marks above 1 in modulus")


@dataclass(frozen=True)
class ProductModel:
    """One positive random factor per Poisson center; points are products.

    Unlike cluster marks, the factor law is not bounded by 1, so exact
    windowed sampling needs a finite factor supremum.
    """

    intensity: RadonIntensity
    marks: MarkDistribution


Model = ClusterModel | ProductModel


def law_max_abs(model: Model) -> float:
    """Supremum of |mark| under the model's law (inf for unbounded factors)."""
    if isinstance(model, ClusterModel):
        return float(model.cluster_law.max_abs)
    return float(model.marks.w_max)


def law_max_sum(model: Model) -> float:
    """Supremum of the cluster sum under the model's law."""
    if isinstance(model, ClusterModel):
        return float(model.cluster_law.max_sum)
    return float(model.marks.w_max)


def sum_mark_distribution(model: Model):
    """The law of the per-center sum as a mark distribution, when enumerable.

    Returns None for cluster laws with non-uniform multi-configuration
    support (nothing in the shipped laws produces that).
    """
    from .levy import EmpiricalMarks, PointMass

    if isinstance(model, ProductModel):
        return model.marks
    configs = model.cluster_law.configurations()
    sums = [float(np.sum(q)) for _, q in configs]
    if any(s <= 0 for s in sums):
        return None
    if len(sums) == 1:
        return PointMass(sums[0])
    probs = [p for p, _ in configs]
    if not np.allclose(probs, probs[0]):
        return None
    return EmpiricalMarks(tuple(sums))


def _law_sample(model: Model, rng) -> np.ndarray:
    if isinstance(model, ClusterModel):
        return _check_marks(model.cluster_law.sample(rng))
    w = model.marks.sample(rng, 1)
    if w[0] <= 0:
        raise ValueError("product factors must be positive")
    return np.asarray(w, dtype=float)


_law_max_abs = law_max_abs
_law_max_sum = law_max_sum


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def _poisson_points(intensity: RadonIntensity, floor: float, rng) -> np.ndarray:
    rate = scalar(intensity.tail(np.asarray([floor])))
    if not np.isfinite(rate):
        raise ValueError("intensity has infinite mass above the window floor")
    k = int(rng.poisson(rate))
    if k == 0:
        return np.empty(0)
    levels = rng.random(k) * rate
    return np.asarray(intensity.tail_inverse(levels))


def sample_poisson_points(
    intensity: RadonIntensity, window_floor: float, seed: int, replicate: int = 0
) -> PointConfiguration:
    """Poisson process restricted to (window_floor, inf) by inverse-tail
    sampling: Poisson count at the tail mass, i.i.d. positions."""
    if not window_floor > 0:
        raise ValueError("window floor must be positive")
    pts = _poisson_points(intensity, window_floor, derive_rng(seed, replicate, 0))
    return PointConfiguration(points=pts, window_floor=window_floor)


@dataclass(frozen=True)
class ClusterRealization:
    centers: np.ndarray
    clusters: tuple[np.ndarray, ...]
    center_floor: float
    law_max_sum: float  # sup cluster sum under the law, for sum-window validity


@dataclass(frozen=True)
class SummedProcess:
    """Per-cluster sums; exact on (center_floor * law_max_sum, inf)."""

    points: np.ndarray
    valid_above: float

    def count(self, lo: float, hi: float = np.inf) -> int:
        if lo < self.valid_above - 1e-12:
            raise ValueError(
                f"summed process is only exact above {self.valid_above:g}; asked for ({lo}, {hi}]"
            )
        return int(np.count_nonzero((self.points > lo) & (self.points <= hi)))


def cluster_realization(
    model: Model, center_floor: float, seed: int, replicate: int = 0
) -> ClusterRealization:
    """Centers above ``center_floor`` with one sampled cluster each."""
    if not center_floor > 0:
        raise ValueError("center floor must be positive")
    rng = derive_rng(seed, replicate, 0)
    centers = _poisson_points(model.intensity, center_floor, rng)
    clusters = tuple(_law_sample(model, rng) for _ in range(centers.size))
    return ClusterRealization(
        centers=centers,
        clusters=clusters,
        center_floor=center_floor,
        law_max_sum=_law_max_sum(model),
    )


def sample_cluster_points(
    model: Model, window_floor: float, seed: int, replicate: int = 0
) -> PointConfiguration:
    """Superpose center*mark over all clusters, retaining the window.

    Exact restriction: a product point exceeds the floor only when its
    center exceeds floor / (largest possible mark), so simulating centers
    above that level loses nothing.  Unbounded factor laws are rejected.
    """
    if not window_floor > 0:
        raise ValueError("window floor must be positive")
    max_abs = _law_max_abs(model)
    if not np.isfinite(max_abs) or max_abs <= 0:
        raise ValueError("windowed sampling needs a finite positive mark supremum")
    real = cluster_realization(model, window_floor / max_abs, seed, replicate)
    prods = [c * q for c, q in zip(real.centers, real.clusters)]
    flat = np.concatenate(prods) if prods else np.empty(0)
    flat = flat[np.abs(flat) > window_floor]
    return PointConfiguration(points=flat, window_floor=window_floor)


def sum_clusters(realization: ClusterRealization) -> SummedProcess:
    """Map each cluster to the sum of its points (center times mark sum)."""
    sums = []
    for c, q in zip(realization.centers, realization.clusters):
        s = float(np.sum(c * q))
        if not np.isfinite(s) or abs(s) > CLUSTER_SUM_CAP:
            raise ValueError("cluster is not summable: running point sum exceeds the cap")
        sums.append(s)
    return SummedProcess(
        points=np.asarray(sums),
        valid_above=realization.center_floor * max(realization.law_max_sum, 1e-300),
    )


# ---------------------------------------------------------------------------
# Laplace functionals
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LaplaceEstimate:
    estimate: float
    se: float
    replicates: int


def laplace_mc(
    sampler,
    f,
    replicates: int,
    seed: int,
    executor: Executor | None = None,
) -> LaplaceEstimate:
    """Monte Carlo mean of exp(-sum f(points)).

    ``sampler`` maps a per-replicate Generator to an array of points;
    replicate r uses the stream derived from (seed, r), so the estimate
    does not depend on chunking or worker count.
    """
    if replicates < 2:
        raise ValueError("need at least 2 replicates for a standard error")

    def run_range(r0: int, r1: int) -> np.ndarray:
        out = np.empty(r1 - r0)
        for j, r in enumerate(range(r0, r1)):
            pts = np.asarray(sampler(derive_rng(seed, r)))
            out[j] = np.exp(-float(np.sum(f(pts)))) if pts.size else 1.0
        return out

    chunk = 2048
    edges = list(range(0, replicates, chunk)) + [replicates]
    ranges = list(zip(edges[:-1], edges[1:]))
    if executor is None:
        blocks = [run_range(r0, r1) for r0, r1 in ranges]
    else:
        blocks = list(executor.map(lambda rr: run_range(*rr), ranges))
    values = np.concatenate(blocks)
    mean, se = batch_mean_se(values)
    return LaplaceEstimate(estimate=mean, se=se, replicates=replicates)


def cluster_point_sampler(model: Model, window_floor: float):
    """Sampler closure over the model's windowed point process."""
    max_abs = _law_max_abs(model)
    if not np.isfinite(max_abs) or max_abs <= 0:
        raise ValueError("windowed sampling needs a finite positive mark supremum")
    center_floor = window_floor / max_abs

    def _sample(rng: np.random.Generator) -> np.ndarray:
        centers = _poisson_points(model.intensity, center_floor, rng)
        prods = [c * _law_sample(model, rng) for c in centers]
        flat = np.concatenate(prods) if prods else np.empty(0)
        return flat[np.abs(flat) > window_floor]

    return _sample


def poisson_point_sampler(intensity: RadonIntensity, window_floor: float):
    def _sample(rng: np.random.Generator) -> np.ndarray:
        return _poisson_points(intensity, window_floor, rng)

    return _sample


def _inner_functional(model: Model, f):
    """y -> E[1 - exp(-sum f(y * cluster))], exact in the mark law."""
    if isinstance(model, ClusterModel):
        configs = model.cluster_law.configurations()

        def inner(y: float) -> float:
            acc = 0.0
            for p, q in configs:
                acc += p * (1.0 - np.exp(-float(np.sum(f(y * q)))))
            return acc

        atoms = [np.asarray(q) for _, q in configs]
        return inner, atoms

    marks = model.marks

    def inner(y: float) -> float:
        return marks.expect(lambda w: 1.0 - np.exp(-f(y * w)))

    atoms = [np.asarray(marks.values)] if hasattr(marks, "values") else None
    if hasattr(marks, "w") and atoms is None:
        atoms = [np.asarray([marks.w])]
    return inner, atoms


def laplace_analytic(model: Model, f, rtol: float = 1e-9) -> float:
    """Exact Laplace functional of the windowless process.

    The center integral runs in tail coordinates (z = intensity tail at
    the center), where the integrand is bounded; mark atoms contribute
    breakpoints wherever a mark crosses a kink of f.  Unbounded factor
    laws fall back to shell accumulation on both improper ends.
    """
    lo, hi = getattr(f, "support", (None, None))
    if lo is None:
        raise ValueError("laplace_analytic needs a test function exposing .support")
    inner, atoms = _inner_functional(model, f)
    max_abs = _law_max_abs(model)
    if max_abs == 0.0:
        return 1.0
    intensity = model.intensity

    def integrand(z: float) -> float:
        y = scalar(intensity.tail_inverse(np.asarray([z])))
        return inner(y)

    if not np.isfinite(max_abs):
        low = shell_quad(integrand, 0.0, 1.0, singular_at="lower", rtol=rtol)
        up = shell_quad(integrand, 1.0, np.inf, singular_at="upper", rtol=rtol)
        if low.diverged or up.diverged:
            raise RuntimeError("center integral diverged; the Laplace exponent is not finite")
        return float(np.exp(-(low.value + up.value)))

    y_lo = lo / max_abs
    z_hi = scalar(intensity.tail(np.asarray([y_lo])))
    kinks = getattr(f, "breakpoints", (lo,) if not np.isfinite(hi) else (lo, hi))
    breaks = {0.0, z_hi}
    for q in atoms or []:
        for qj in np.asarray(q):
            if qj == 0.0:
                continue
            for e in kinks:
                if not np.isfinite(e):
                    continue
                z = scalar(intensity.tail(np.asarray([e / abs(qj)])))
                if 0.0 < z < z_hi:
                    breaks.add(float(z))
    grid = np.asarray(sorted(breaks))
    total = 0.0
    err = 0.0
    for a, b in zip(grid[:-1], grid[1:]):
        v, e = integrate.quad(integrand, a, b, limit=200)
        total += v
        err += e
    if err > max(1e-12, rtol * abs(total)):
        raise RuntimeError(
            f"center integral did not converge: achieved error {err:.3g} on value {total:.6g}"
        )
    return float(np.exp(-total))
