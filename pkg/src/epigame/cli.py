"""Command line entry point: ``epigame run`` and ``epigame validate``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import metrics
from . import timing as tm
from .errors import EpigameError, NonConvergenceError
from .solver import solve_nash

log = logging.getLogger("epigame")

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_SOLVER = 2
DEFAULT_OUTDIR = "epigame-out"
TIMESERIES_COLUMNS = ("t", "s", "i", "r", "k", "v_hat_s", "v_hat_i", "pdf", "survival")
SUMMARY_COLUMNS = ("peak_i", "t_peak", "duration", "expected_vaccinations", "final_s",
                   "utility", "eta", "min_k")


def run_id(index: int, point: dict) -> str:
    if not point:
        return "run"
    parts = [f"{axis}={value:g}" for axis, value in point.items()]
    return f"{index:03d}_" + "_".join(parts)


def timeseries_array(result) -> np.ndarray:
    t = result.times
    traj, adj = result.trajectory, result.adjoints
    timing = result.scenario.timing
    if isinstance(timing, tm.Sharp):
        dens = np.full_like(t, np.nan)
    else:
        dens = np.asarray(tm.pdf(timing, t), dtype=float)
    surv = np.asarray(tm.survival(timing, t), dtype=float)
    return np.column_stack([t, traj.s, traj.i, traj.r, traj.k,
                            adj.v_hat_s, adj.v_hat_i, dens, surv])


def write_timeseries(path: Path, result) -> None:
    np.savetxt(path, timeseries_array(result), fmt="%.12e", delimiter=",",
               header=",".join(TIMESERIES_COLUMNS), comments="")


def _execute(task: tuple) -> dict:
    """Solve one sweep point and write its run directory. Runs in worker processes."""
    index, point, base, timing, outdir = task
    rid = run_id(index, point)
    rundir = Path(outdir) / rid
    rundir.mkdir(parents=True, exist_ok=True)
    scenario = cfgmod.build_scenario(base, timing, point)
    row = {"run_id": rid, **point}
    doc = {"run_id": rid, "sweep_point": point,
           "scenario": cfgmod.scenario_to_dict(scenario)}
    result = None
    try:
        result = solve_nash(scenario)
        status = "converged"
    except NonConvergenceError as exc:
        result = exc.result
        status = "not_converged"
        doc["error"] = str(exc)
    except EpigameError as exc:
        status = "failed"
        doc["error"] = str(exc)
    doc["status"] = status
    row["status"] = status
    if result is not None:
        summary = metrics.summarize(result)
        write_timeseries(rundir / "timeseries.csv", result)
        doc["summary"] = summary.to_dict()
        doc["self_consistency"] = (None if result.self_consistency is None
                                   else result.self_consistency.to_dict())
        doc["solver"] = {"iterations": result.iterations, "residual": result.residual,
                         "converged": result.converged, "clamped": result.clamped,
                         "omega": result.omega}
        row.update({c: getattr(summary, c) for c in SUMMARY_COLUMNS})
        row["iterations"] = result.iterations
        row["residual"] = result.residual
    else:
        doc["summary"] = None
        doc["self_consistency"] = None
    with open(rundir / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")
    return row


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.12e}"
    return str(v)


def write_sweep_csv(path: Path, rows: list[dict], axes: list[str]) -> None:
    header = ["run_id", *axes, "status", *SUMMARY_COLUMNS, "iterations", "residual"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(row.get(h)) for h in header])


def resolve_outdir(cli_value: str | None, config_value: str | None) -> Path:
    for candidate in (cli_value, config_value, os.environ.get("EPIGAME_OUTDIR")):
        if candidate:
            return Path(candidate)
    return Path(DEFAULT_OUTDIR)


def cmd_run(args) -> int:
    try:
        doc = cfgmod.load_document(args.config)
    except cfgmod.ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    cfg, violations = cfgmod.parse(doc)
    if violations:
        for v in violations:
            print(f"error: {v}", file=sys.stderr)
        return EXIT_PARSE
    outdir = resolve_outdir(args.outdir, cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    points = cfg.points()
    tasks = [(j, p, cfg.base, cfg.timing, str(outdir)) for j, p in enumerate(points)]
    if args.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_execute, tasks))
    else:
        rows = [_execute(t) for t in tasks]
    axes = [s.axis for s in cfg.sweeps]
    write_sweep_csv(outdir / "sweep.csv", rows, axes)
    if args.svg:
        from .plotting import sweep_figure
        sweep_figure(outdir, rows, axes)
    bad = [r["run_id"] for r in rows if r["status"] != "converged"]
    for row in rows:
        print(f"{row['run_id']}: {row['status']}")
    if bad:
        print(f"{len(bad)} of {len(rows)} runs did not converge", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def cmd_validate(args) -> int:
    report = cfgmod.validate(args.config)
    for key in report.defaulted:
        default = cfgmod.DEFAULTS.get(key, {"kind": "never"})
        print(f"defaulted: {key} = {default}")
    for v in report.violations:
        print(f"violation: {v}")
    if report.ok:
        print(f"ok: {report.n_runs} run(s)")
        return EXIT_OK
    return EXIT_PARSE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="epigame", description="Nash-equilibrium social distancing under uncertain vaccination")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="solve a scenario or sweep")
    run.add_argument("config")
    run.add_argument("--outdir", default=None,
                     help="output directory (overrides config and EPIGAME_OUTDIR)")
    run.add_argument("--jobs", type=int, default=1, help="parallel sweep workers")
    run.add_argument("--svg", action="store_true", help="also write figure.svg")
    run.set_defaults(func=cmd_run)
    val = sub.add_parser("validate", help="check a config without solving")
    val.add_argument("config")
    val.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be at least 1")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
