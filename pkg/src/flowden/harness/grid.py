"""Weighting x class x model x dataset-size x seed grids."""
from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .. import metrics
from ..errors import ConfigError
from ..sampler import IntegratorConfig, sample
from .config import Dataset, EvalConfig, GridSpec, RunConfig
from .train import denoiser_fn, network_fn, train

log = logging.getLogger(__name__)

ROW_KEYS = ("name", "model", "weighting", "param_class", "n_train", "seed", "iterations", "status", "failure")


def evaluate_run(result, ev: EvalConfig):
    """PSNR curve on the test split (and the train split if asked), sample moments, residual stats."""
    cfg = result.config
    data = result.data
    row = {k: v for k, v in (
        ("name", cfg.name), ("model", cfg.model.label), ("weighting", cfg.weighting),
        ("param_class", cfg.param_class), ("n_train", cfg.data.n_train), ("seed", cfg.seed),
        ("iterations", cfg.iterations), ("status", result.status), ("failure", result.failure),
    )}
    if not result.ok:
        return row
    params = result.params(ev.use_ema)
    den = denoiser_fn(cfg.model, params, cfg.cls)
    n_eval = min(ev.n_eval, data.test.shape[0])
    curve = metrics.psnr_curve(den, data.test, ev.grid, n_eval, ev.eval_seed)
    for t, p in zip(curve.grid, curve.psnr):
        row[f"psnr@{t:g}"] = p
    if ev.eval_train and data.train is not None:
        n_tr = min(ev.n_eval, data.train.shape[0])
        tr = metrics.psnr_curve(den, data.train, ev.grid, n_tr, ev.eval_seed)
        for t, p in zip(tr.grid, tr.psnr):
            row[f"train_psnr@{t:g}"] = p
    if ev.n_generate > 0:
        icfg = IntegratorConfig(method=ev.sample_method, steps=ev.sample_steps)
        try:
            gen = sample(network_fn(cfg.model, params), cfg.cls, data.shape, ev.n_generate, icfg, ev.sample_seed)
        except Exception as exc:  # noqa: BLE001 - a failed sampler must not kill the row
            row["sample_failure"] = str(exc)
        else:
            ref = data.test[: max(ev.n_generate, 2)]
            row.update(metrics.moment_distance(gen, ref))
            if data.mode_set is not None:
                floor = metrics.residual_floor(data.train if data.train is not None else data.test, data.mode_set)
                stats = metrics.residual_energy_stats(gen, data.mode_set, floor)
                row.update({f"eres_{k}": v for k, v in stats.items()})
    return row


def run_cell(cfg: RunConfig, ev: EvalConfig, out_dir=None):
    """Train and evaluate one cell; every failure ends up in the row."""
    try:
        cell_dir = os.path.join(out_dir, cfg.name) if out_dir else None
        result = train(cfg, out_dir=cell_dir)
        return evaluate_run(result, ev)
    except Exception as exc:  # noqa: BLE001 - failure containment is the point
        log.exception("cell %s failed", cfg.name)
        return {"name": cfg.name, "model": cfg.model.label, "weighting": cfg.weighting,
                "param_class": cfg.param_class, "n_train": cfg.data.n_train, "seed": cfg.seed,
                "iterations": cfg.iterations, "status": "error", "failure": f"{type(exc).__name__}: {exc}"}


def _run_cell_args(args):
    return run_cell(*args)


def run_grid(grid: GridSpec, out_dir=None, workers=1):
    """One row per cell, in cell order regardless of completion order."""
    cells = grid.cells()
    if not cells:
        raise ConfigError("empty grid")
    args = [(c, grid.eval, out_dir) for c in cells]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_cell_args, args))
    else:
        rows = [run_cell(*a) for a in args]
    return rows


def psnr_columns(rows, prefix="psnr@"):
    cols = []
    for r in rows:
        for k in r:
            if k.startswith(prefix) and k not in cols:
                cols.append(k)
    return cols


def delta_psnr_rows(rows, prefix="psnr@"):
    """Pair c_den/c_vel rows sharing every other key; returns ``{key: [delta per t]}``."""
    cols = psnr_columns(rows, prefix)
    by_key = {}
    for r in rows:
        if r.get("status") != "ok":
            continue
        key = (r["model"], r["weighting"], r["n_train"], r["seed"])
        by_key.setdefault(key, {})[r["param_class"]] = r
    out = {}
    for key, pair in by_key.items():
        if "c_den" in pair and "c_vel" in pair:
            out[key] = [pair["c_den"][c] - pair["c_vel"][c] for c in cols]
    return cols, out


def mean_over_seeds(values):
    return float(np.mean(values)) if values else float("nan")
