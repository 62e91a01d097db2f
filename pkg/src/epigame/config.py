"""Run configuration: parsing, defaults, validation and sweep expansion.

Configs are JSON documents::

    {
      "alpha": 400, "kappa_star": 3, "t_end": 200, "dt": 0.01,
      "timing": {"kind": "erlang", "n": 10, "mean_tv": 20},
      "sweep": {"axis": "mean_tv", "values": [10, 20, 40]},
      "outdir": "out/fig3"
    }

``sweep`` may also be a list of ``{"axis", "values"}`` objects, which are
expanded as a cartesian product.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from . import timing as tm
from .dynamics import Grid
from .errors import EpigameError
from .solver import Scenario, scenario_violations

DEFAULTS = {
    "alpha": 400.0,
    "beta": 1.0,
    "kappa_star": 3.0,
    "i0": 1e-4,
    "rho": 0.0,
    "t_end": 200.0,
    "dt": 0.01,
}
TOP_KEYS = set(DEFAULTS) | {"timing", "sweep", "outdir"}
TIMING_KEYS = {"kind", "t_v", "n", "tau", "mean_tv"}
SWEEP_AXES = ("t_v", "mean_tv", "n", "alpha", "kappa_star")


class ConfigError(EpigameError):
    """Raised for unreadable or unparsable configuration files."""


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    values: tuple


@dataclass
class RunConfig:
    base: dict
    timing: dict
    sweeps: list[SweepSpec]
    outdir: str | None
    defaulted: list[str] = field(default_factory=list)

    def points(self) -> list[dict]:
        """Axis assignments for every run, in deterministic order."""
        if not self.sweeps:
            return [{}]
        axes = [s.axis for s in self.sweeps]
        return [dict(zip(axes, combo))
                for combo in itertools.product(*(s.values for s in self.sweeps))]

    def scenario(self, point: dict | None = None) -> Scenario:
        return build_scenario(self.base, self.timing, point or {})


@dataclass
class ValidationReport:
    violations: list[str]
    defaulted: list[str]
    n_runs: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations


def load_document(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}: parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return doc


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def make_timing(spec: dict):
    kind = spec.get("kind", "never")
    if kind == "never":
        return tm.Never()
    if kind == "sharp":
        return tm.Sharp(float(spec["t_v"]))
    if kind == "erlang":
        n = spec["n"]
        if "mean_tv" in spec:
            return tm.Erlang.from_mean(float(spec["mean_tv"]), n)
        return tm.Erlang(n=n, tau=float(spec["tau"]))
    raise ValueError(f"unknown timing kind {kind!r}")


def build_scenario(base: dict, timing: dict, point: dict) -> Scenario:
    values = dict(base)
    timing = dict(timing)
    for axis, v in point.items():
        if axis in ("alpha", "kappa_star"):
            values[axis] = v
        elif axis == "t_v":
            timing = {"kind": "sharp", "t_v": v}
        elif axis == "mean_tv":
            timing["kind"] = "erlang"
            timing.pop("tau", None)
            timing["mean_tv"] = v
        elif axis == "n":
            timing["kind"] = "erlang"
            timing["n"] = v
    grid = Grid(t_end=float(values["t_end"]), dt=float(values["dt"]))
    return Scenario(alpha=float(values["alpha"]), beta=float(values["beta"]),
                    kappa_star=float(values["kappa_star"]), i0=float(values["i0"]),
                    rho=float(values["rho"]), timing=make_timing(timing), grid=grid)


def _check_timing(spec, violations):
    if not isinstance(spec, dict):
        violations.append("timing must be an object")
        return
    for key in spec:
        if key not in TIMING_KEYS:
            violations.append(f"unknown key 'timing.{key}'")
    kind = spec.get("kind", "never")
    if kind not in ("never", "sharp", "erlang"):
        violations.append(f"timing.kind must be one of never, sharp, erlang (got {kind!r})")
        return
    if kind == "sharp" and "t_v" not in spec:
        violations.append("timing.t_v is required for sharp timing")
    if kind == "erlang":
        if "n" not in spec:
            violations.append("timing.n is required for erlang timing")
        if ("tau" in spec) == ("mean_tv" in spec):
            violations.append("erlang timing needs exactly one of timing.tau, timing.mean_tv")
    for key in ("t_v", "tau", "mean_tv"):
        if key in spec and not _is_number(spec[key]):
            violations.append(f"timing.{key} must be a finite number")
    if "n" in spec and not (isinstance(spec["n"], int) and not isinstance(spec["n"], bool)):
        violations.append("timing.n must be an integer")


def _check_sweeps(raw, violations) -> list[SweepSpec]:
    if raw is None:
        return []
    items = raw if isinstance(raw, list) else [raw]
    sweeps = []
    for item in items:
        if not isinstance(item, dict) or set(item) != {"axis", "values"}:
            violations.append("each sweep must be an object with exactly 'axis' and 'values'")
            continue
        axis, values = item["axis"], item["values"]
        if axis not in SWEEP_AXES:
            violations.append(f"sweep.axis must be one of {', '.join(SWEEP_AXES)} (got {axis!r})")
            continue
        if not isinstance(values, list) or not values:
            violations.append(f"sweep.values for axis {axis} must be a non-empty list")
            continue
        if not all(_is_number(v) for v in values):
            violations.append(f"sweep.values for axis {axis} must be finite numbers")
            continue
        if axis == "n" and not all(isinstance(v, int) for v in values):
            violations.append("sweep.values for axis n must be integers")
            continue
        if any(s.axis == axis for s in sweeps):
            violations.append(f"sweep axis {axis} given twice")
            continue
        sweeps.append(SweepSpec(axis=axis, values=tuple(values)))
    return sweeps


def parse(doc: dict) -> tuple[RunConfig, list[str]]:
    """Resolve defaults and collect every violation without solving anything."""
    violations = []
    defaulted = []
    for key in doc:
        if key not in TOP_KEYS:
            violations.append(f"unknown key '{key}'")
    base = {}
    for key, default in DEFAULTS.items():
        if key in doc:
            if not _is_number(doc[key]):
                violations.append(f"{key} must be a finite number")
                base[key] = default
            else:
                base[key] = float(doc[key])
        else:
            base[key] = default
            defaulted.append(key)
    timing = doc.get("timing", {"kind": "never"})
    if "timing" not in doc:
        defaulted.append("timing")
    before = len(violations)
    _check_timing(timing, violations)
    timing_ok = len(violations) == before
    sweeps = _check_sweeps(doc.get("sweep"), violations)
    outdir = doc.get("outdir")
    if outdir is not None and not isinstance(outdir, str):
        violations.append("outdir must be a string")
        outdir = None
    cfg = RunConfig(base=base, timing=timing if isinstance(timing, dict) else {},
                    sweeps=sweeps, outdir=outdir, defaulted=defaulted)
    # non-numeric entries were replaced by defaults above, so these checks are independent
    violations.extend(scenario_violations(
        base["alpha"], base["beta"], base["kappa_star"], base["i0"], base["rho"]))
    try:
        Grid(t_end=base["t_end"], dt=base["dt"])
    except EpigameError as exc:
        violations.append(str(exc))
    if timing_ok:
        try:
            make_timing(timing)
        except (ValueError, KeyError, EpigameError) as exc:
            violations.append(str(exc))
    if not violations:
        for point in cfg.points():
            try:
                cfg.scenario(point)
            except (ValueError, KeyError, EpigameError) as exc:
                where = f" at sweep point {point}" if point else ""
                violations.append(f"{exc}{where}")
    return cfg, violations


def validate(path) -> ValidationReport:
    try:
        doc = load_document(path)
    except ConfigError as exc:
        return ValidationReport(violations=[str(exc)], defaulted=[])
    cfg, violations = parse(doc)
    return ValidationReport(violations=violations, defaulted=cfg.defaulted,
                            n_runs=len(cfg.points()) if not violations else 0)


def scenario_to_dict(sc: Scenario) -> dict:
    t = sc.timing
    if isinstance(t, tm.Sharp):
        timing = {"kind": "sharp", "t_v": t.t_v}
    elif isinstance(t, tm.Erlang):
        timing = {"kind": "erlang", "n": t.n, "tau": t.tau, "mean_tv": t.mean()}
    else:
        timing = {"kind": "never"}
    return {"alpha": sc.alpha, "beta": sc.beta, "kappa_star": sc.kappa_star,
            "i0": sc.i0, "s0": sc.s0, "rho": sc.rho, "t_end": sc.grid.t_end,
            "dt": sc.grid.dt, "n_points": sc.grid.n_points, "timing": timing}
