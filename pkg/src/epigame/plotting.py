"""Static SVG rendering of sweep results."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed ids so identical inputs give identical SVG bytes
matplotlib.rcParams["svg.hashsalt"] = "epigame"

PLOT_T_MAX = 100.0


def _load(rundir: Path):
    path = rundir / "timeseries.csv"
    if not path.exists():
        return None
    return np.loadtxt(path, delimiter=",", skiprows=1)


def sweep_figure(outdir, rows: list[dict], axes: list[str]) -> Path:
    """Behaviour, susceptibles and infected for every run, plus s(t_v) vs the first axis."""
    outdir = Path(outdir)
    extra = bool(axes) and axes[0] in ("t_v", "mean_tv")
    ncols = 4 if extra else 3
    fig, ax = plt.subplots(1, ncols, figsize=(4 * ncols, 3.4))
    for row in rows:
        data = _load(outdir / row["run_id"])
        if data is None:
            continue
        keep = data[:, 0] <= PLOT_T_MAX
        t = data[keep, 0]
        label = row["run_id"]
        for a, col in zip(ax[:3], (4, 1, 2)):
            a.plot(t, data[keep, col], lw=1.0, label=label)
    for a, name in zip(ax[:3], ("k", "s", "i")):
        a.set_xlabel("t")
        a.set_ylabel(name)
    ax[0].legend(fontsize=6)
    if extra:
        axis = axes[0]
        groups = {}
        for row in rows:
            if row.get("expected_vaccinations") is None:
                continue
            key = tuple((a, row[a]) for a in axes[1:])
            groups.setdefault(key, []).append((row[axis], row["expected_vaccinations"]))
        for key, pts in groups.items():
            pts.sort()
            label = ", ".join(f"{a}={v:g}" for a, v in key) or "s(t_v)"
            ax[3].plot([p[0] for p in pts], [p[1] for p in pts], "o-", ms=3, label=label)
        ax[3].set_xlabel(axis)
        ax[3].set_ylabel("expected vaccinations")
        ax[3].legend(fontsize=6)
    fig.tight_layout()
    path = outdir / "figure.svg"
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path
