"""Nonnegative Lipschitz test functions with support bounded away from 0.

Laplace functionals and the asymptotic-condition estimators quantify over
all continuous compactly supported nonnegative functions; numerically we
fix a finite witness family (the "bank", versioned in package data) of
smoothed indicators and hat functions, evaluated on the modulus so the
same functions serve one- and two-sided observation windows.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

__all__ = ["TestFunction", "step_indicator", "load_test_bank"]


@dataclass(frozen=True)
class TestFunction:
    """Piecewise-linear bump on [lo, hi], evaluated at |x|.

    ``box`` rises linearly over ``ramp``, holds ``height``, and falls over
    ``ramp`` (a smoothed indicator; ramp=0 gives the sharp indicator,
    which is not Lipschitz and is meant for closed-form oracles).
    ``hat`` is the triangle peaking midway.  ``hi`` may be inf for box
    shapes, giving a one-sided smoothed step.
    """

    lo: float
    hi: float
    height: float = 1.0
    shape: str = "box"
    ramp: float = 0.0

    def __post_init__(self):
        if not self.lo > 0:
            raise ValueError("support must be bounded away from 0")
        if not self.hi > self.lo:
            raise ValueError("need hi > lo")
        if self.height <= 0:
            raise ValueError("height must be positive")
        if self.shape not in ("box", "hat"):
            raise ValueError(f"unknown shape {self.shape!r}")
        if self.shape == "hat" and not np.isfinite(self.hi):
            raise ValueError("hat functions need a finite support")
        if self.ramp < 0:
            raise ValueError("ramp must be >= 0")
        if self.shape == "box" and np.isfinite(self.hi) and 2.0 * self.ramp > self.hi - self.lo:
            raise ValueError("ramps overlap: need 2*ramp <= hi - lo")

    @property
    def support(self) -> tuple[float, float]:
        return (self.lo, self.hi)

    @property
    def lipschitz(self) -> float:
        if self.shape == "hat":
            return 2.0 * self.height / (self.hi - self.lo)
        if self.ramp == 0.0:
            return np.inf
        return self.height / self.ramp

    @property
    def breakpoints(self) -> tuple[float, ...]:
        if self.shape == "hat":
            return (self.lo, 0.5 * (self.lo + self.hi), self.hi)
        pts = [self.lo, self.lo + self.ramp]
        if np.isfinite(self.hi):
            pts += [self.hi - self.ramp, self.hi]
        return tuple(sorted(set(pts)))

    def __call__(self, x) -> np.ndarray:
        m = np.abs(np.asarray(x, dtype=float))
        if self.shape == "hat":
            half = 0.5 * (self.hi - self.lo)
            mid = self.lo + half
            return self.height * np.maximum(0.0, 1.0 - np.abs(m - mid) / half)
        if self.ramp == 0.0:
            inside = (m >= self.lo) & (m <= self.hi)
            return self.height * inside.astype(float)
        up = np.clip((m - self.lo) / self.ramp, 0.0, 1.0)
        if np.isfinite(self.hi):
            down = np.clip((self.hi - m) / self.ramp, 0.0, 1.0)
            return self.height * np.minimum(up, down)
        return self.height * up

    def label(self) -> str:
        hi = "inf" if not np.isfinite(self.hi) else f"{self.hi:g}"
        return f"{self.shape}[{self.lo:g},{hi}]h{self.height:g}"


def step_indicator(threshold: float, height: float = 1.0, ramp: float = 0.0) -> TestFunction:
    """height * 1_[threshold, inf), optionally with a Lipschitz ramp."""
    return TestFunction(lo=threshold, hi=np.inf, height=height, shape="box", ramp=ramp)


def load_test_bank(version: str = "v1") -> list[TestFunction]:
    """Load the fixed witness family shipped with the package."""
    path = resources.files("pplimits") / "data" / f"testbank_{version}.json"
    spec = json.loads(path.read_text())
    if spec.get("version") != version:
        raise ValueError(f"test bank file reports version {spec.get('version')!r}, expected {version!r}")
    return [
        TestFunction(
            lo=f["lo"],
            hi=f["hi"],
            height=f.get("height", 1.0),
            shape=f.get("shape", "box"),
            ramp=f.get("ramp", 0.0),
        )
        for f in spec["functions"]
    ]
