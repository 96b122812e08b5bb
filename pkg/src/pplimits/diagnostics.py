"""Monte Carlo estimators for the asymptotic negligibility and
weak-dependence conditions, block-construction arithmetic, and the
distributional test kit (two-sample KS, Poisson dispersion, Hill index).

Limit statements ("lim sup over n", "lim over the dependence range") are
operationalized as finite-grid estimates with standard errors; trend
checks compare grid points within joint confidence bands.  Every
estimator reports its SE from replicate batching and never a bare point.
"""

from __future__ import annotations

import csv as _csv
import io
import json
import math
from concurrent.futures import Executor
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy import signal, stats

from .arrays import ArrayModel
from .numerics import batch_mean_se
from .rng import derive_rng

__all__ = [
    "Window",
    "ReportEntry",
    "DiagnosticReport",
    "BlockScheme",
    "block_scheme",
    "exceedance_rate",
    "truncated_mean_rate",
    "pair_exceedance_sum",
    "block_factorization_gap",
    "block_laplace_rate",
    "laplace_increment_rate",
    "covariance_tail_sum",
    "clamped_identity",
    "KSResult",
    "ks_two_sample",
    "poissonity_check",
    "hill_tail_index",
    "trend_is_monotone",
]


@dataclass(frozen=True)
class Window:
    """Observation set (lo, hi] on the value or its modulus."""

    lo: float
    hi: float = np.inf
    modulus: bool = False

    def __post_init__(self):
        if not self.lo >= 0 or not self.hi > self.lo:
            raise ValueError("need 0 <= lo < hi")

    def contains(self, x: np.ndarray) -> np.ndarray:
        v = np.abs(x) if self.modulus else np.asarray(x)
        return (v > self.lo) & (v <= self.hi)

    def label(self) -> str:
        hi = "inf" if not np.isfinite(self.hi) else f"{self.hi:g}"
        return f"{'|x| in ' if self.modulus else ''}({self.lo:g},{hi}]"


@dataclass(frozen=True)
class ReportEntry:
    name: str
    estimate: float
    se: float
    replicates: int
    target: float | None = None
    target_provenance: str | None = None
    verdict: str | None = None
    detail: dict = field(default_factory=dict)

    def judged(self, target: float, provenance: str, atol: float = 0.0, sigma: float = 3.0) -> "ReportEntry":
        """Attach an analytic target and a pass/fail verdict."""
        ok = abs(self.estimate - target) <= sigma * self.se + atol
        return replace(
            self,
            target=float(target),
            target_provenance=provenance,
            verdict="pass" if ok else "fail",
        )

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "estimate": self.estimate,
            "se": self.se,
            "target": self.target,
            "target_provenance": self.target_provenance,
            "verdict": self.verdict,
            "replicates": self.replicates,
            "detail": self.detail,
        }


@dataclass
class DiagnosticReport:
    entries: list[ReportEntry] = field(default_factory=list)

    def add(self, entry: ReportEntry) -> None:
        self.entries.append(entry)

    def extend(self, entries) -> None:
        self.entries.extend(entries)

    @property
    def all_pass(self) -> bool:
        return all(e.verdict in (None, "pass", "trend-only") for e in self.entries)

    def to_json(self) -> str:
        payload = [e.as_dict() for e in sorted(self.entries, key=lambda e: e.name)]
        return json.dumps(payload, indent=2, sort_keys=True, allow_nan=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = _csv.writer(buf, lineterminator="\n")
        w.writerow(["name", "estimate", "se", "target", "target_provenance", "verdict", "replicates"])
        for e in sorted(self.entries, key=lambda e: e.name):
            w.writerow(
                [
                    e.name,
                    repr(e.estimate),
                    repr(e.se),
                    "" if e.target is None else repr(e.target),
                    e.target_provenance or "",
                    e.verdict or "",
                    e.replicates,
                ]
            )
        return buf.getvalue()


# ---------------------------------------------------------------------------
# replicate plumbing
# ---------------------------------------------------------------------------


def _map_replicates(
    fn: Callable[[int, np.random.Generator], object],
    replicates: int,
    seed: int,
    executor: Executor | None = None,
    chunk: int = 256,
) -> list:
    """fn(r, rng_r) over replicate streams, merged in replicate order."""

    def run_range(r0: int, r1: int) -> list:
        return [fn(r, derive_rng(seed, r, 0)) for r in range(r0, r1)]

    edges = list(range(0, replicates, chunk)) + [replicates]
    ranges = list(zip(edges[:-1], edges[1:]))
    if executor is None:
        blocks = [run_range(r0, r1) for r0, r1 in ranges]
    else:
        blocks = list(executor.map(lambda rr: run_range(*rr), ranges))
    return [v for b in blocks for v in b]


def _entry_from_values(name: str, values: np.ndarray, replicates: int, detail: dict) -> ReportEntry:
    est, se = batch_mean_se(values)
    return ReportEntry(name=name, estimate=est, se=se, replicates=replicates, detail=detail)


# ---------------------------------------------------------------------------
# negligibility estimators
# ---------------------------------------------------------------------------


def exceedance_rate(
    model: ArrayModel,
    n: int,
    window: Window,
    replicates: int,
    seed: int,
    executor: Executor | None = None,
) -> ReportEntry:
    """n * P(row entry falls in the window), averaged over each row by
    stationarity; SE across independent rows."""

    def one(r, rng):
        row = model.sample_row(n, rng)
        return n * float(np.mean(window.contains(row)))

    vals = np.asarray(_map_replicates(one, replicates, seed, executor))
    return _entry_from_values(
        f"exceedance_rate[n={n},B={window.label()}]",
        vals,
        replicates,
        {"n": n, "window": window.label()},
    )


def truncated_mean_rate(
    model: ArrayModel,
    n: int,
    eps: float,
    replicates: int,
    seed: int,
    executor: Executor | None = None,
) -> ReportEntry:
    """n * E[entry * 1{entry <= eps}] for positive-entry models."""
    if not eps > 0:
        raise ValueError("eps must be positive")

    def one(r, rng):
        row = model.sample_row(n, rng)
        return n * float(np.mean(np.where(row <= eps, row, 0.0)))

    vals = np.asarray(_map_replicates(one, replicates, seed, executor))
    return _entry_from_values(
        f"truncated_mean_rate[n={n},eps={eps:g}]",
        vals,
        replicates,
        {"n": n, "eps": eps},
    )


# ---------------------------------------------------------------------------
# pairwise anti-clustering estimator
# ---------------------------------------------------------------------------


def _pair_sum(values: np.ndarray, n: int, lag_lo: int, lag_hi: int) -> float:
    """n * sum over lags in [lag_lo, lag_hi] of the shift-averaged product
    moment, exploiting sparsity of the nonzero values."""
    nz = np.flatnonzero(values)
    if nz.size < 2:
        return 0.0
    total = 0.0
    v = values
    # two-pointer sweep over nonzero index pairs within the lag band
    j_start = 0
    for a_pos, a in enumerate(nz):
        lo_idx = a + lag_lo
        hi_idx = a + lag_hi
        j = np.searchsorted(nz, lo_idx, side="left")
        while j < nz.size and nz[j] <= hi_idx:
            b = nz[j]
            lag = b - a
            total += v[a] * v[b] * n / (n - lag)
            j += 1
    return total


def pair_exceedance_sum(
    model: ArrayModel,
    n: int,
    r_block: int,
    gap: int,
    f,
    replicates: int,
    seed: int,
    executor: Executor | None = None,
) -> ReportEntry:
    """n * sum_{j=gap+1}^{r_block} E[f(X_1) f(X_j)] by shift averaging.

    Also reports the same sum for the sharp exceedance indicator at the
    lower support edge of f (the modulus-window variant).
    """
    if r_block > n:
        raise ValueError("block length cannot exceed n")
    warn = None
    if gap >= r_block:
        warn = "gap >= block length: the lag band is empty and the sum is exactly 0"
    eta = getattr(f, "support", (None,))[0]

    def one(r, rng):
        row = model.sample_row(n, rng)
        if gap >= r_block:
            return (0.0, 0.0)
        v = np.asarray(f(row), dtype=float)
        main = _pair_sum(v, n, gap, r_block - 1)
        ind = np.nan
        if eta is not None:
            vi = (np.abs(row) >= eta).astype(float)
            ind = _pair_sum(vi, n, gap, r_block - 1)
        return (main, ind)

    pairs = _map_replicates(one, replicates, seed, executor)
    main = np.asarray([p[0] for p in pairs])
    ind = np.asarray([p[1] for p in pairs])
    est, se = batch_mean_se(main)
    detail = {"n": n, "r_block": r_block, "gap": gap, "f": getattr(f, "label", lambda: "f")()}
    if warn:
        detail["warning"] = warn
    if eta is not None and not np.isnan(ind).any():
        i_est, i_se = batch_mean_se(ind)
        detail["indicator_variant"] = {"eta": eta, "estimate": i_est, "se": i_se}
    return ReportEntry(
        name=f"pair_exceedance_sum[n={n},r={r_block},gap={gap}]",
        estimate=est,
        se=se,
        replicates=replicates,
        detail=detail,
    )


# ---------------------------------------------------------------------------
# Laplace-functional estimators
# ---------------------------------------------------------------------------


def block_factorization_gap(
    model: ArrayModel,
    n: int,
    r_block: int,
    f,
    replicates: int,
    seed: int,
    executor: Executor | None = None,
) -> ReportEntry:
    """|L_full - L_block ** k| for k = n // r_block, with delta-method SE.

    The full-row and block Laplace transforms share rows (common random
    numbers), so the difference is estimated with positively correlated
    errors.  The detail carries the remainder bound
    (n - r*k) * E[f(entry)], which caps the part of the gap due to the
    leftover n - r*k terms.
    """
    if r_block > n:
        raise ValueError("block length cannot exceed n")
    k = n // r_block

    def one(r, rng):
        row = model.sample_row(n, rng)
        v = np.asarray(f(row), dtype=float)
        s_block = float(v[:r_block].sum())
        s_full = float(v.sum())
        return (math.exp(-s_full), math.exp(-s_block), float(v.mean()))

    triples = _map_replicates(one, replicates, seed, executor)
    e_full = np.asarray([t[0] for t in triples])
    e_block = np.asarray([t[1] for t in triples])
    f_mean = float(np.mean([t[2] for t in triples]))
    R = e_full.size
    L_full = float(e_full.mean())
    L_block = float(e_block.mean())
    diff = L_full - L_block**k
    grad = k * L_block ** (k - 1)
    cov = np.cov(e_full, e_block, ddof=1)
    var = (cov[0, 0] + grad * grad * cov[1, 1] - 2.0 * grad * cov[0, 1]) / R
    se = float(np.sqrt(max(var, 0.0)))
    remainder_bound = (n - r_block * k) * f_mean
    return ReportEntry(
        name=f"block_factorization_gap[n={n},r={r_block}]",
        estimate=abs(diff),
        se=se,
        replicates=replicates,
        detail={
            "n": n,
            "r_block": r_block,
            "k": k,
            "signed_gap": diff,
            "L_full": L_full,
            "L_block": L_block,
            "remainder_bound": remainder_bound,
            "f": getattr(f, "label", lambda: "f")(),
        },
    )


def block_laplace_rate(
    model: ArrayModel,
    n: int,
    r_block: int,
    f,
    replicates: int,
    seed: int,
    executor: Executor | None = None,
) -> ReportEntry:
    """k * (1 - L_block) with k = n // r_block: the per-block rate whose
    limit identifies the canonical measure functional."""
    if r_block > n:
        raise ValueError("block length cannot exceed n")
    k = n // r_block

    def one(r, rng):
        prefix = model.sample_prefix(r_block, n, rng)
        return math.exp(-float(np.sum(f(prefix))))

    vals = np.asarray(_map_replicates(one, replicates, seed, executor))
    est, se = batch_mean_se(vals)
    return ReportEntry(
        name=f"block_laplace_rate[n={n},r={r_block}]",
        estimate=k * (1.0 - est),
        se=k * se,
        replicates=replicates,
        detail={"n": n, "r_block": r_block, "k": k, "f": getattr(f, "label", lambda: "f")()},
    )


def laplace_increment_rate(
    model: ArrayModel,
    n: int,
    m: int,
    f,
    replicates: int,
    seed: int,
    executor: Executor | None = None,
) -> ReportEntry:
    """n * (L_{m-1} - L_m), with two variance cuts: the two Laplace terms
    share the same row entries (common random numbers, making every
    per-window increment nonnegative), and stationarity lets each row
    contribute all n-m+1 shifted windows instead of only the first."""
    if m < 1 or m > n:
        raise ValueError("need 1 <= m <= n")

    def one(r, rng):
        row = model.sample_row(n, rng)
        v = np.asarray(f(row), dtype=float)
        c = np.concatenate(([0.0], np.cumsum(v)))
        # window [i, i+m-1]: head = exp(-sum of first m-1 values)
        head = np.exp(-(c[m - 1 : n] - c[0 : n - m + 1]))
        tail_term = 1.0 - np.exp(-v[m - 1 : n])
        return float(np.mean(head * tail_term))

    vals = np.asarray(_map_replicates(one, replicates, seed, executor))
    est, se = batch_mean_se(vals)
    return ReportEntry(
        name=f"laplace_increment_rate[n={n},m={m}]",
        estimate=n * est,
        se=n * se,
        replicates=replicates,
        detail={"n": n, "m": m, "f": getattr(f, "label", lambda: "f")(), "shift_averaged": True},
    )


# ---------------------------------------------------------------------------
# association covariance estimator
# ---------------------------------------------------------------------------


def clamped_identity(lo: float, hi: float) -> Callable[[np.ndarray], np.ndarray]:
    """g(x) = min(max(x, lo), hi): bounded, nondecreasing, identity on [lo, hi]."""
    if not lo < hi:
        raise ValueError("need lo < hi")

    def g(x):
        return np.clip(x, lo, hi)

    g.label = lambda: f"clamp[{lo:g},{hi:g}]"  # type: ignore[attr-defined]
    return g


def covariance_tail_sum(
    model: ArrayModel,
    n: int,
    m: int,
    g,
    replicates: int,
    seed: int,
    executor: Executor | None = None,
) -> ReportEntry:
    """n * sum_{j=m+1}^{n} Cov(g(X_1), g(X_j)), estimated without a mean
    plug-in: each replicate draws a pair of independent rows and uses the
    cross-row product as the exact zero-covariance reference.
    """
    if m < 0 or m > n:
        raise ValueError("need 0 <= m <= n")

    def one(r, rng):
        if m >= n:
            return 0.0
        ga = np.asarray(g(model.sample_row(n, rng)), dtype=float)
        gb = np.asarray(g(model.sample_row(n, rng)), dtype=float)
        # lagged product sums for all lags at once
        auto = signal.fftconvolve(ga, ga[::-1])[n - 1 :]
        cross = signal.fftconvolve(ga, gb[::-1])[n - 1 :]
        lags = np.arange(n)
        band = (lags >= m) & (lags <= n - 1)
        weights = np.zeros(n)
        weights[band] = 1.0 / (n - lags[band])
        return n * float(np.sum((auto - cross) * weights))

    vals = np.asarray(_map_replicates(one, replicates, seed, executor))
    est, se = batch_mean_se(vals)
    return ReportEntry(
        name=f"covariance_tail_sum[n={n},m={m}]",
        estimate=est,
        se=se,
        replicates=replicates,
        detail={"n": n, "m": m, "g": getattr(g, "label", lambda: "g")()},
    )


# ---------------------------------------------------------------------------
# block construction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BlockScheme:
    """Big-block/small-block sizes derived from a mixing-coefficient bound.

    With rho = profile(floor(sqrt(n))):
        epsilon = max(n**-1/4, sqrt(rho)),  delta = n**-1/2 / epsilon,
        eta = rho / (2 epsilon),            r = floor(n * epsilon),
        k = floor(n / r),                   m = floor(sqrt(n)).
    These guarantee r >= n**(3/4)/2 and k >= 1/(2 epsilon).
    """

    n: int
    rho: float
    epsilon: float
    delta: float
    eta: float
    r: int
    k: int
    m: int
    coupling: float  # k * profile(m)

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "rho": self.rho,
            "epsilon": self.epsilon,
            "delta": self.delta,
            "eta": self.eta,
            "r": self.r,
            "k": self.k,
            "m": self.m,
            "coupling": self.coupling,
        }


def block_scheme(n: int, mixing_profile: Callable[[int], float]) -> BlockScheme:
    if n < 4:
        raise ValueError("need n >= 4")
    m = int(math.floor(math.sqrt(n)))
    rho = float(mixing_profile(m))
    if not 0.0 <= rho <= 1.0:
        raise ValueError("mixing profile must take values in [0, 1]")
    epsilon = max(n ** (-0.25), math.sqrt(rho))
    delta = n ** (-0.5) / epsilon
    eta = rho / (2.0 * epsilon)
    r = int(math.floor(n * epsilon))
    k = int(math.floor(n / r))
    scheme = BlockScheme(
        n=n,
        rho=rho,
        epsilon=epsilon,
        delta=delta,
        eta=eta,
        r=r,
        k=k,
        m=m,
        coupling=k * float(mixing_profile(m)),
    )
    # construction guarantees, kept as hard checks
    if not scheme.r >= n**0.75 / 2.0:
        raise AssertionError("block construction violated r >= n^(3/4)/2")
    if not scheme.k >= 1.0 / (2.0 * epsilon):
        raise AssertionError("block construction violated k >= 1/(2 epsilon)")
    return scheme


# ---------------------------------------------------------------------------
# distributional checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KSResult:
    statistic: float
    pvalue: float
    level: float

    @property
    def reject(self) -> bool:
        return self.pvalue < self.level


def ks_two_sample(sample_a, sample_b, level: float = 0.01) -> KSResult:
    a = np.asarray(sample_a, dtype=float)
    b = np.asarray(sample_b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be nonempty")
    res = stats.ks_2samp(a, b, method="auto")
    return KSResult(statistic=float(res.statistic), pvalue=float(res.pvalue), level=level)


def poissonity_check(counts, level: float = 0.01) -> ReportEntry:
    """Dispersion (variance/mean) and chi-square goodness of fit against a
    Poisson law with the sample mean."""
    c = np.asarray(counts, dtype=float)
    if c.size < 10:
        raise ValueError("need at least 10 count replicates")
    mean = float(c.mean())
    detail: dict = {"mean": mean, "variance": float(c.var(ddof=1))}
    if mean == 0.0:
        return ReportEntry(
            name="poissonity",
            estimate=0.0,
            se=np.nan,
            replicates=c.size,
            verdict="fail",
            detail={**detail, "warning": "degenerate input: all counts are zero"},
        )
    dispersion = float(c.var(ddof=1) / mean)
    # under Poisson, (R-1)*dispersion ~ chi2(R-1)
    R = c.size
    stat = (R - 1) * dispersion
    p_disp = 2.0 * min(stats.chi2.cdf(stat, R - 1), stats.chi2.sf(stat, R - 1))
    # chi-square GOF with tail pooling to expected counts >= 5
    kmax = int(c.max())
    probs = stats.poisson.pmf(np.arange(kmax + 1), mean)
    probs = np.append(probs, max(1.0 - probs.sum(), 0.0))
    observed = np.bincount(c.astype(int), minlength=kmax + 2).astype(float)
    expected = probs * R
    # pool from the right until every expected bin is >= 5
    while expected.size > 2 and expected[-1] < 5.0:
        expected[-2] += expected[-1]
        observed[-2] += observed[-1]
        expected = expected[:-1]
        observed = observed[:-1]
    if expected.size > 2:
        chi = float(np.sum((observed - expected) ** 2 / expected))
        dof = expected.size - 2  # mean estimated
        p_gof = float(stats.chi2.sf(chi, dof))
        detail["gof_pvalue"] = p_gof
    else:
        p_gof = np.nan
        detail["gof_pvalue"] = None
    detail["dispersion_pvalue"] = p_disp
    ok = p_disp >= level and (np.isnan(p_gof) or p_gof >= level)
    se = float(np.sqrt(2.0 / (R - 1)))  # SE of the dispersion under Poisson
    return ReportEntry(
        name="poissonity",
        estimate=dispersion,
        se=se,
        replicates=R,
        target=1.0,
        target_provenance="unit dispersion of a Poisson law",
        verdict="pass" if ok else "fail",
        detail=detail,
    )


def hill_tail_index(sample, top_fraction: float) -> float:
    """Hill estimator over the top order statistics."""
    if not 0.0 < top_fraction < 1.0:
        raise ValueError("top_fraction must lie in (0, 1)")
    x = np.asarray(sample, dtype=float)
    x = x[x > 0]
    if x.size < 100:
        raise ValueError("need at least 100 positive values")
    k = max(int(np.floor(top_fraction * x.size)), 1)
    top = np.sort(x)[-(k + 1) :]
    ref = top[0]
    logs = np.log(top[1:] / ref)
    denom = float(logs.mean())
    if denom <= 0.0:
        raise ValueError("degenerate sample: top order statistics are constant")
    return 1.0 / denom


def trend_is_monotone(estimates, ses, direction: str, sigma: float = 3.0) -> bool:
    """Nonincreasing/nondecreasing within joint confidence bands."""
    e = np.asarray(estimates, dtype=float)
    s = np.asarray(ses, dtype=float)
    if direction not in ("decreasing", "increasing"):
        raise ValueError("direction must be 'decreasing' or 'increasing'")
    for i in range(e.size - 1):
        slack = sigma * float(np.hypot(s[i], s[i + 1]))
        if direction == "decreasing" and e[i + 1] > e[i] + slack:
            return False
        if direction == "increasing" and e[i + 1] < e[i] - slack:
            return False
    return True
