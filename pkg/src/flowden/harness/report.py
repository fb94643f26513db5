"""CSV tables and SVG plots for grid results."""
from __future__ import annotations

import csv
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from ..errors import ConfigError  # noqa: E402
from .grid import delta_psnr_rows, psnr_columns  # noqa: E402

MISSING = "NA"
POS_COLOR = "#2ca02c"  # positive delta: clean-image prediction better
NEG_COLOR = "#d62728"

plt.rcParams["svg.hashsalt"] = "flowden"


def _fmt(v):
    if isinstance(v, bool):
        return str(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _parse(s):
    for conv in (int, float):
        try:
            return conv(s)
        except ValueError:
            pass
    return s


def columns(rows):
    cols = []
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    return cols


def write_results_csv(rows, path):
    cols = columns(rows)
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([_fmt(r[c]) if c in r else MISSING for c in cols])


def read_results_csv(path):
    with open(path, newline="") as f:
        reader = csv.reader(f)
        cols = next(reader)
        rows = []
        for rec in reader:
            row = {}
            for c, v in zip(cols, rec):
                if v == MISSING:
                    continue
                row[c] = "" if v == "" else _parse(v)
            rows.append(row)
    return rows


def _save_svg(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_delta_psnr(grid, curves, path, title="PSNR(c_den) - PSNR(c_vel)"):
    """``curves``: label -> list of deltas on ``grid``. Green above zero, red below."""
    fig, ax = plt.subplots(figsize=(6, 4))
    grid = np.asarray(grid, dtype=float)
    for label, d in curves.items():
        d = np.asarray(d, dtype=float)
        ax.plot(grid, d, marker="o", label=label)
        ax.fill_between(grid, 0, d, where=d >= 0, color=POS_COLOR, alpha=0.15, interpolate=True)
        ax.fill_between(grid, 0, d, where=d < 0, color=NEG_COLOR, alpha=0.15, interpolate=True)
    ax.axhline(0.0, color="black", lw=0.8)
    ax.set_xlabel("t")
    ax.set_ylabel("delta PSNR (dB)")
    ax.set_title(title)
    ax.legend(fontsize=8)
    _save_svg(fig, path)


def plot_psnr_curves(grid, curves, path, title="PSNR"):
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, p in curves.items():
        ax.plot(grid, p, marker="o", label=label)
    ax.set_xlabel("t")
    ax.set_ylabel("PSNR (dB)")
    ax.set_title(title)
    ax.legend(fontsize=8)
    _save_svg(fig, path)


def plot_weighting_bars(rows, path):
    cols = psnr_columns(rows)
    means = {}
    for r in rows:
        if r.get("status") != "ok" or not cols:
            continue
        key = f"{r['weighting']}|{r['param_class']}"
        means.setdefault(key, []).append(np.mean([r[c] for c in cols]))
    fig, ax = plt.subplots(figsize=(max(4, 0.8 * len(means) + 2), 4))
    labels = list(means)
    vals = [float(np.mean(means[k])) for k in labels]
    ax.bar(range(len(labels)), vals, color="#1f77b4")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=7)
    ax.set_ylabel("mean PSNR over grid (dB)")
    fig.tight_layout()
    _save_svg(fig, path)


def emit_report(rows, out_dir, name="grid"):
    """Write ``<name>.csv`` plus SVG plots; returns the list of written paths."""
    if not rows:
        raise ConfigError("no results to report")
    os.makedirs(out_dir, exist_ok=True)
    written = []
    csv_path = os.path.join(out_dir, f"{name}.csv")
    write_results_csv(rows, csv_path)
    written.append(csv_path)
    cols, deltas = delta_psnr_rows(rows)
    if deltas:
        grid = [float(c.split("@")[1]) for c in cols]
        by_model = {}
        for (model, weighting, n, _seed), d in deltas.items():
            by_model.setdefault(f"{model} {weighting} n={n}", []).append(d)
        curves = {k: np.mean(v, axis=0) for k, v in sorted(by_model.items())}
        p = os.path.join(out_dir, f"{name}_delta_psnr.svg")
        plot_delta_psnr(grid, curves, p)
        written.append(p)
    if psnr_columns(rows):
        p = os.path.join(out_dir, f"{name}_weightings.svg")
        plot_weighting_bars(rows, p)
        written.append(p)
    return written
