"""CSV and SVG writers for traces, densities and comparison reports.

CSV is the artifact of record: header row, ``.`` decimal separator, LF line
endings, floats with 17 significant digits so values round-trip bit for
bit. The SVG plot is a convenience rendering of the same numbers.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def coordinate_names(dim: int) -> list[str]:
    return ["pi1"] if dim == 1 else [f"q{j + 1}" for j in range(dim)]


def _grid_rows(grid, *columns):
    pts = grid.points.reshape(-1, grid.dim)
    flat = [np.asarray(c, dtype=float).reshape(-1) for c in columns]
    for i in range(pts.shape[0]):
        yield (*pts[i], *(c[i] for c in flat))


def write_abm_trace(out_dir, trace) -> list[Path]:
    out = Path(out_dir)
    rows = zip(trace.times, trace.prob, trace.realized_a1)
    paths = [write_csv(out / "abm_trace.csv", ["t", "mean_prob_a1", "realized_frac_a1"], rows)]
    for t, hist in sorted(trace.histograms.items()):
        grid = trace.histogram_grid
        header = coordinate_names(grid.dim) + ["fraction"]
        paths.append(write_csv(out / f"abm_hist_t{t}.csv", header, _grid_rows(grid, hist)))
    return paths


def write_pde_trace(out_dir, trace) -> list[Path]:
    out = Path(out_dir)
    paths = [write_csv(out / "pde_trace.csv", ["t", "expected_prob_a1"], zip(trace.times, trace.prob))]
    for t, snap in sorted(trace.snapshots.items()):
        header = coordinate_names(snap.grid.dim) + ["density", "cell_mass"]
        rows = _grid_rows(snap.grid, snap.values, snap.cell_mass())
        paths.append(write_csv(out / f"pde_density_t{t}.csv", header, rows))
    return paths


def write_report(out_dir, report) -> list[Path]:
    out = Path(out_dir)
    rows = zip(report.times, report.pde_prob, report.abm_prob, report.gap)
    paths = [write_csv(out / "report.csv", ["t", "pde_prob_a1", "abm_prob_a1", "abs_gap"], rows)]
    if report.hist_l1:
        rows = sorted(report.hist_l1.items())
        paths.append(write_csv(out / "report_hist_l1.csv", ["t", "l1_distance"], rows))
    return paths


def plot_compare(path, report, title: str = "") -> Path:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    # fixed salt and no date keep the SVG byte-stable across runs
    matplotlib.rcParams["svg.hashsalt"] = "popdyn"
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(report.times, report.abm_prob, color="tab:orange", alpha=0.6, lw=3, label="agent-based average")
    ax.plot(report.times, report.pde_prob, color="tab:blue", lw=1.2, label="density expectation")
    ax.set_xlabel("t")
    ax.set_ylabel("probability of action 1")
    ax.set_ylim(-0.02, 1.02)
    if title:
        ax.set_title(title)
    ax.legend(loc="best")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path
