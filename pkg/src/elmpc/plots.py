"""Static SVG figures comparing a baseline and a compensated run."""

import csv

import matplotlib
import numpy as np
from matplotlib.figure import Figure

PLOT_FILES = (
    "trajectory.svg",
    "heading.svg",
    "steering.svg",
    "estimated_vs_realized_error.svg",
)
COMPARISON_COLUMNS = (
    "t", "X_base", "Y_base", "X_cand", "Y_cand", "Y_ref_base", "Y_ref_cand",
    "phi_base", "phi_cand", "phi_ref_base", "phi_ref_cand",
    "u_star_base", "u_star_cand", "e_cand", "e_hat_cand",
)


def _padded(slog, key, n):
    out = np.full(n, np.nan)
    v = slog[key]
    out[: len(v)] = v
    return out


def comparison_table(baseline, candidate):
    n = max(len(baseline), len(candidate))
    t = _padded(baseline, "t", n) if len(baseline) >= len(candidate) else _padded(candidate, "t", n)
    cols = {"t": t}
    for tag, slog in (("base", baseline), ("cand", candidate)):
        for key in ("X", "Y", "Y_ref", "phi", "phi_ref", "u_star"):
            cols[f"{key}_{tag}"] = _padded(slog, key, n)
    cols["e_cand"] = _padded(candidate, "e", n)
    cols["e_hat_cand"] = _padded(candidate, "e_hat", n)
    return {k: cols[k] for k in COMPARISON_COLUMNS}


def write_comparison_csv(path, table):
    n = len(table["t"])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COMPARISON_COLUMNS)
        for i in range(n):
            w.writerow([repr(float(table[k][i])) for k in COMPARISON_COLUMNS])


def _save(fig, path):
    # no timestamp and fixed element ids so reruns give identical bytes
    with matplotlib.rc_context({"svg.hashsalt": "elmpc", "svg.fonttype": "path"}):
        fig.savefig(path, format="svg", metadata={"Date": None})


def _figure(xlabel, ylabel):
    fig = Figure(figsize=(7.0, 3.6))
    ax = fig.add_subplot()
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    return fig, ax


def write_plots(out_dir, table, labels=("MPC only", "MPC + compensator")):
    """Write the four comparison figures into ``out_dir``; returns their paths."""
    base, cand = labels
    paths = [out_dir / name for name in PLOT_FILES]

    fig, ax = _figure("X (m)", "Y (m)")
    ax.plot(table["X_base"], table["Y_ref_base"], "k--", lw=1, label="reference")
    ax.plot(table["X_base"], table["Y_base"], label=base)
    ax.plot(table["X_cand"], table["Y_cand"], label=cand)
    ax.legend()
    _save(fig, paths[0])

    fig, ax = _figure("X (m)", "heading (rad)")
    ax.plot(table["X_base"], table["phi_ref_base"], "k--", lw=1, label="reference")
    ax.plot(table["X_base"], table["phi_base"], label=base)
    ax.plot(table["X_cand"], table["phi_cand"], label=cand)
    ax.legend()
    _save(fig, paths[1])

    fig, ax = _figure("t (s)", "steering angle (rad)")
    ax.plot(table["t"], table["u_star_base"], label=base)
    ax.plot(table["t"], table["u_star_cand"], label=cand)
    ax.legend()
    _save(fig, paths[2])

    fig, ax = _figure("t (s)", "one-step predictive error (m)")
    ax.plot(table["t"], table["e_cand"], label="realized")
    ax.plot(table["t"], table["e_hat_cand"], label="estimated")
    ax.legend()
    _save(fig, paths[3])
    return paths
