"""Experiment configuration: a flat INI file with documented sections.

Every experiment file has an ``[experiment]`` section carrying the kind
(sample | cluster | diagnose | blocks | converge), a mandatory seed, a
replicate budget, and optional out/threads defaults.  Remaining sections
declare the measure/model/intensity objects by kind name plus parameters;
see the recipe files shipped under ``pplimits/recipes`` for worked
examples of every section.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import arrays, cluster, levy, testfuncs
from .series import TruncationPolicy

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_config_text"]

KINDS = ("sample", "cluster", "diagnose", "blocks", "converge")


class ConfigError(ValueError):
    """Invalid or missing configuration; carries the offending field."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"[{field_name}] {message}")
        self.field = field_name


@dataclass
class ExperimentConfig:
    kind: str
    seed: int
    replicates: int
    out: str | None
    threads: int
    raw: configparser.ConfigParser = field(repr=False)
    text: str = field(repr=False, default="")

    # -- typed section accessors -------------------------------------------

    def measure(self) -> levy.LevyMeasure:
        return _parse_measure(self.raw)

    def truncation(self) -> TruncationPolicy:
        return _parse_truncation(self.raw)

    def model(self) -> arrays.ArrayModel:
        return _parse_model(self.raw)

    def intensity(self) -> levy.RadonIntensity:
        return _parse_intensity(self.raw)

    def point_model(self) -> cluster.ClusterModel | cluster.ProductModel:
        return _parse_point_model(self.raw)

    def functions(self, key_section: str, key: str = "f") -> list[testfuncs.TestFunction]:
        return _parse_functions(_get(self.raw, key_section, key, "bank"))

    def get(self, section: str, key: str, fallback=None) -> str | None:
        return _get(self.raw, section, key, fallback)

    def getfloat(self, section: str, key: str, fallback: float | None = None) -> float | None:
        v = _get(self.raw, section, key, None)
        if v is None:
            if fallback is None:
                return None
            return fallback
        return _to_float(f"{section}.{key}", v)

    def getint(self, section: str, key: str, fallback: int | None = None) -> int | None:
        v = _get(self.raw, section, key, None)
        if v is None:
            return fallback
        return _to_int(f"{section}.{key}", v)

    def getbool(self, section: str, key: str, fallback: bool = False) -> bool:
        v = _get(self.raw, section, key, None)
        if v is None:
            return fallback
        if v.lower() in ("1", "true", "yes", "on"):
            return True
        if v.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{section}.{key}", f"not a boolean: {v!r}")

    def grid(self, section: str, key: str, cast=int) -> list:
        v = _get(self.raw, section, key, None)
        if v is None:
            raise ConfigError(f"{section}.{key}", "missing grid")
        try:
            items = [cast(float(tok)) if cast is int else cast(tok) for tok in _split(v)]
        except ValueError as exc:
            raise ConfigError(f"{section}.{key}", f"bad grid entry: {exc}") from exc
        if not items:
            raise ConfigError(f"{section}.{key}", "grid must be nonempty")
        return items


def load_config(path: str | Path) -> ExperimentConfig:
    p = Path(path)
    if not p.exists():
        raise ConfigError("config", f"no such file: {p}")
    return parse_config_text(p.read_text())


def parse_config_text(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("config", f"unparseable config: {exc}") from exc
    if not cp.has_section("experiment"):
        raise ConfigError("experiment", "missing [experiment] section")
    kind = _get(cp, "experiment", "kind", None)
    if kind is None:
        raise ConfigError("experiment.kind", "missing experiment kind")
    if kind not in KINDS:
        raise ConfigError("experiment.kind", f"unknown kind {kind!r}; expected one of {KINDS}")
    seed_raw = _get(cp, "experiment", "seed", None)
    if seed_raw is None:
        raise ConfigError("experiment.seed", "missing mandatory seed")
    seed = _to_int("experiment.seed", seed_raw)
    replicates = _to_int("experiment.replicates", _get(cp, "experiment", "replicates", "10000"))
    if replicates < 1:
        raise ConfigError("experiment.replicates", "must be >= 1")
    threads = _to_int("experiment.threads", _get(cp, "experiment", "threads", "1"))
    if threads < 1:
        raise ConfigError("experiment.threads", "must be >= 1")
    return ExperimentConfig(
        kind=kind,
        seed=seed,
        replicates=replicates,
        out=_get(cp, "experiment", "out", None),
        threads=threads,
        raw=cp,
        text=text,
    )


# ---------------------------------------------------------------------------
# section parsers
# ---------------------------------------------------------------------------


def _get(cp, section, key, fallback):
    if not cp.has_section(section):
        return fallback
    return cp.get(section, key, fallback=fallback)


def _split(v: str) -> list[str]:
    return [tok.strip() for tok in v.split(",") if tok.strip()]


def _to_float(fieldname: str, v: str) -> float:
    try:
        return float(v)
    except ValueError as exc:
        raise ConfigError(fieldname, f"not a number: {v!r}") from exc


def _to_int(fieldname: str, v: str) -> int:
    try:
        return int(float(v))
    except ValueError as exc:
        raise ConfigError(fieldname, f"not an integer: {v!r}") from exc


def _parse_marks(fieldname: str, spec: str) -> levy.MarkDistribution:
    name, _, rest = spec.partition(":")
    args = _split(rest) if rest else []
    try:
        if name == "pointmass":
            return levy.PointMass(float(args[0]))
        if name == "lognormal":
            return levy.LogNormalMarks(float(args[0]), float(args[1]))
        if name == "geometric_sum":
            return levy.GeometricWeightsSum(float(args[0]))
        if name == "empirical":
            return levy.EmpiricalMarks(tuple(float(a) for a in args))
    except (IndexError, ValueError) as exc:
        raise ConfigError(fieldname, f"bad mark parameters in {spec!r}: {exc}") from exc
    raise ConfigError(fieldname, f"unknown mark law {name!r}")


def _parse_measure(cp) -> levy.LevyMeasure:
    if not cp.has_section("measure"):
        raise ConfigError("measure", "missing [measure] section")
    kind = _get(cp, "measure", "kind", None)
    if kind is None:
        raise ConfigError("measure.kind", "missing measure kind")
    try:
        if kind == "stable":
            return levy.Stable(
                _to_float("measure.alpha", _get(cp, "measure", "alpha", None) or "nan"),
                _to_float("measure.gamma", _get(cp, "measure", "gamma", "1.0")),
            )
        if kind == "gamma":
            return levy.GammaLevy(_to_float("measure.alpha", _get(cp, "measure", "alpha", None) or "nan"))
        if kind == "product_power":
            nu = levy.PowerTail(
                _to_float("measure.nu_alpha", _get(cp, "measure", "nu_alpha", None) or "nan"),
                _to_float("measure.nu_scale", _get(cp, "measure", "nu_scale", "1.0")),
            )
            marks = _parse_marks("measure.marks", _get(cp, "measure", "marks", None) or "")
            return levy.ProductConvolution(nu, marks)
        if kind == "tabulated":
            path = _get(cp, "measure", "csv", None)
            if path is None:
                raise ConfigError("measure.csv", "tabulated measures need a csv path")
            return levy.load_tail_csv(path)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("measure", str(exc)) from exc
    raise ConfigError("measure.kind", f"unknown measure kind {kind!r}")


def _parse_truncation(cp) -> TruncationPolicy:
    if not cp.has_section("truncation"):
        return TruncationPolicy()
    try:
        return TruncationPolicy(
            max_terms=_to_int("truncation.max_terms", _get(cp, "truncation", "max_terms", "10000")),
            point_floor=_to_float("truncation.point_floor", _get(cp, "truncation", "point_floor", "1e-8")),
            compensate=_get(cp, "truncation", "compensate", "false").lower() in ("1", "true", "yes", "on"),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("truncation", str(exc)) from exc


def _parse_volatility(fieldname: str, spec: str) -> arrays.VolatilityLaw:
    name, _, rest = spec.partition(":")
    args = _split(rest.replace(":", ",")) if rest else []
    try:
        if name == "moving_max":
            m = int(args[0])
            lo = float(args[1]) if len(args) > 1 else 0.5
            hi = float(args[2]) if len(args) > 2 else 1.5
            return arrays.MovingMaxVolatility(m, lo, hi)
        if name == "log_gaussian":
            r = float(args[0])
            sigma = float(args[1]) if len(args) > 1 else 0.5
            return arrays.LogGaussianVolatility(r, sigma)
    except (IndexError, ValueError) as exc:
        raise ConfigError(fieldname, f"bad volatility parameters in {spec!r}: {exc}") from exc
    raise ConfigError(fieldname, f"unknown volatility law {name!r}")


def _parse_model(cp) -> arrays.ArrayModel:
    if not cp.has_section("model"):
        raise ConfigError("model", "missing [model] section")
    kind = _get(cp, "model", "kind", None)
    if kind is None:
        raise ConfigError("model.kind", "missing model kind")
    alpha_raw = _get(cp, "model", "alpha", None)
    if alpha_raw is None:
        raise ConfigError("model.alpha", "missing tail index")
    alpha = _to_float("model.alpha", alpha_raw)
    try:
        if kind == "iid":
            return arrays.IidHeavyTail(alpha)
        if kind == "moving_sum":
            return arrays.MDependentMovingSum(alpha, _to_int("model.m", _get(cp, "model", "m", None) or "nan"))
        if kind == "linear":
            scale_spec = _get(cp, "model", "row_scale", None)
            return arrays.LinearProcess(
                alpha,
                _to_float("model.theta", _get(cp, "model", "theta", None) or "nan"),
                series_cutoff=_to_int("model.series_cutoff", _get(cp, "model", "series_cutoff", "64")),
                row_scale=_parse_marks("model.row_scale", scale_spec) if scale_spec else None,
            )
        if kind == "volatility":
            spec = _get(cp, "model", "volatility", None)
            if spec is None:
                raise ConfigError("model.volatility", "missing volatility law")
            return arrays.StochasticVolatility(alpha, _parse_volatility("model.volatility", spec))
        if kind == "associated":
            return arrays.AssociatedGaussian(alpha, _to_float("model.r", _get(cp, "model", "r", None) or "nan"))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("model", str(exc)) from exc
    raise ConfigError("model.kind", f"unknown model kind {kind!r}")


def _parse_intensity(cp) -> levy.RadonIntensity:
    if not cp.has_section("intensity"):
        raise ConfigError("intensity", "missing [intensity] section")
    kind = _get(cp, "intensity", "kind", "power")
    try:
        if kind == "power":
            return levy.PowerTail(
                _to_float("intensity.alpha", _get(cp, "intensity", "alpha", None) or "nan"),
                _to_float("intensity.scale", _get(cp, "intensity", "scale", "1.0")),
            )
        if kind == "tabulated":
            path = _get(cp, "intensity", "csv", None)
            if path is None:
                raise ConfigError("intensity.csv", "tabulated intensities need a csv path")
            grid = levy.load_tail_csv(path)
            return levy.TabulatedIntensity(grid.xs, grid.hs)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("intensity", str(exc)) from exc
    raise ConfigError("intensity.kind", f"unknown intensity kind {kind!r}")


def _parse_cluster_law(cp) -> cluster.ClusterLaw | levy.MarkDistribution:
    kind = _get(cp, "clusters", "kind", None)
    if kind is None:
        raise ConfigError("clusters.kind", "missing cluster kind")
    if kind == "deterministic":
        marks = _get(cp, "clusters", "marks", None)
        if marks is None:
            raise ConfigError("clusters.marks", "deterministic clusters need marks")
        return cluster.DeterministicCluster(tuple(_to_float("clusters.marks", m) for m in _split(marks)))
    if kind == "geometric":
        return cluster.GeometricCluster(_to_float("clusters.theta", _get(cp, "clusters", "theta", None) or "nan"))
    if kind == "empirical":
        path = _get(cp, "clusters", "csv", None)
        if path is None:
            raise ConfigError("clusters.csv", "empirical clusters need a csv path")
        return _load_clusters_csv(path)
    if kind == "product":
        spec = _get(cp, "clusters", "product_marks", None)
        if spec is None:
            raise ConfigError("clusters.product_marks", "product models need a mark law")
        return _parse_marks("clusters.product_marks", spec)
    raise ConfigError("clusters.kind", f"unknown cluster kind {kind!r}")


def _parse_point_model(cp) -> cluster.ClusterModel | cluster.ProductModel:
    intensity = _parse_intensity(cp)
    if not cp.has_section("clusters"):
        raise ConfigError("clusters", "missing [clusters] section")
    law = _parse_cluster_law(cp)
    if isinstance(law, levy.MarkDistribution):
        return cluster.ProductModel(intensity, law)
    return cluster.ClusterModel(intensity, law)


def _load_clusters_csv(path: str) -> cluster.EmpiricalClusters:
    rows: list[tuple[float, ...]] = []
    p = Path(path)
    if not p.exists():
        raise ConfigError("clusters.csv", f"no such file: {p}")
    for line in p.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            rows.append(tuple(float(tok) for tok in _split(line)))
        except ValueError as exc:
            raise ConfigError("clusters.csv", f"bad cluster row {line!r}: {exc}") from exc
    if not rows:
        raise ConfigError("clusters.csv", "no clusters found")
    return cluster.EmpiricalClusters(tuple(rows))


def _parse_functions(spec: str) -> list[testfuncs.TestFunction]:
    out: list[testfuncs.TestFunction] = []
    for tok in _split(spec) or ["bank"]:
        name, _, rest = tok.partition(":")
        args = [a for a in rest.split(":") if a] if rest else []
        if name == "bank":
            out.extend(testfuncs.load_test_bank(args[0] if args else "v1"))
        elif name == "step":
            if not args:
                raise ConfigError("f", "step functions need a threshold")
            thr = float(args[0])
            height = float(args[1]) if len(args) > 1 else 1.0
            ramp = float(args[2]) if len(args) > 2 else 0.0
            out.append(testfuncs.step_indicator(thr, height, ramp))
        elif name == "box":
            if len(args) < 2:
                raise ConfigError("f", "box functions need lo and hi")
            out.append(
                testfuncs.TestFunction(
                    lo=float(args[0]),
                    hi=float(args[1]),
                    height=float(args[2]) if len(args) > 2 else 1.0,
                    shape="box",
                    ramp=float(args[3]) if len(args) > 3 else 0.0,
                )
            )
        else:
            raise ConfigError("f", f"unknown test-function spec {tok!r}")
    return out


def parse_profile(spec: str):
    """Mixing-coefficient profile by name: inverse | zero | geometric:r."""
    name, _, rest = spec.partition(":")
    if name == "inverse":
        return lambda m: 1.0 / m if m >= 1 else 1.0
    if name == "zero":
        return lambda m: 0.0
    if name == "geometric":
        r = float(rest or "nan")
        if not 0.0 <= r < 1.0:
            raise ConfigError("blocks.profile", f"geometric rate must lie in [0,1), got {rest!r}")
        return lambda m: min(1.0, r**m)
    raise ConfigError("blocks.profile", f"unknown profile {spec!r}")
