"""Command line entry point: ``flowden <subcommand> ...``."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import metrics, oracle
from .data.fourier import FourierManifoldSpec, make_fourier_dataset
from .data.io import write_dataset
from .harness.config import Dataset, GridSpec, RunConfig, output_root
from .harness.grid import run_grid
from .harness.report import emit_report, plot_delta_psnr, plot_psnr_curves
from .harness.train import denoiser_fn, load_run, network_fn, train
from .objectives import WeightingScheme
from .sampler import IntegratorConfig, sample


def _out(path, default_name):
    return path or os.path.join(output_root(), default_name)


def cmd_train(args):
    with open(args.config) as f:
        cfg = RunConfig.from_json(f.read())
    out = _out(args.out or cfg.output_dir, cfg.name)
    res = train(cfg, out_dir=out)
    print(f"{cfg.name}: {res.status} {res.failure}".rstrip())
    print(f"wrote {out}")
    return 0 if res.ok else 2


def cmd_grid(args):
    with open(args.config) as f:
        grid = GridSpec.from_dict(json.load(f))
    out = _out(args.out, "grid")
    rows = run_grid(grid, out_dir=out, workers=args.workers)
    for p in emit_report(rows, out, name="grid"):
        print(f"wrote {p}")
    return 0


def cmd_sample(args):
    cfg, store = load_run(args.checkpoint)
    params = store.ema if (store.ema is not None and not args.raw) else store.params
    icfg = IntegratorConfig(method=args.method, steps=args.steps)
    x = sample(network_fn(cfg.model, params), cfg.cls, cfg.model.input_shape, args.count, icfg, args.seed)
    header = {"kind": "generated", "source": cfg.to_dict(), "integrator": {"method": args.method, "steps": args.steps, "seed": args.seed}}
    if cfg.data.kind == "fourier":
        data = Dataset(cfg.data)
        header["fourier"] = data.fourier.to_dict()
        header["mode_set"] = data.mode_set.to_dict()
    write_dataset(args.out, x, header)
    print(f"wrote {args.count} samples to {args.out}")
    return 0


def cmd_eval_psnr(args):
    cfg, store = load_run(args.checkpoint)
    data = Dataset(cfg.data)
    eval_set = data.train if args.split == "train" else data.test
    grid = [float(t) for t in args.grid.split(",")]
    n = min(args.n, eval_set.shape[0])

    def curve_for(c, s):
        params = s.ema if (s.ema is not None and not args.raw) else s.params
        return metrics.psnr_curve(denoiser_fn(c.model, params, c.cls), eval_set, grid, n, args.seed)

    curve = curve_for(cfg, store)
    out = _out(args.out, "eval_psnr")
    os.makedirs(out, exist_ok=True)
    rows = [("t", "psnr", "n", "seed")] + [(t, p, n, args.seed) for t, p in zip(curve.grid, curve.psnr)]
    curves = {cfg.param_class: curve.psnr}
    if args.compare:
        cfg2, store2 = load_run(args.compare)
        other = curve_for(cfg2, store2)
        curves[cfg2.param_class] = other.psnr
        # delta is always first-minus-second; pass the c_den run first for the usual sign
        delta = curve - other
        rows[0] = rows[0] + ("psnr_compare", "delta")
        rows[1:] = [r + (o, d) for r, o, d in zip(rows[1:], other.psnr, delta.psnr)]
        plot_delta_psnr(grid, {f"{cfg.param_class} - {cfg2.param_class}": delta.psnr},
                        os.path.join(out, "delta_psnr.svg"))
    with open(os.path.join(out, "psnr.csv"), "w") as f:
        for r in rows:
            f.write(",".join(repr(v) if isinstance(v, float) else str(v) for v in r) + "\n")
    plot_psnr_curves(grid, curves, os.path.join(out, "psnr.svg"))
    for t, p in zip(curve.grid, curve.psnr):
        print(f"t={t:g}  psnr={p:.3f} dB")
    print(f"wrote {out}")
    return 0


def cmd_gen_dataset(args):
    spec = FourierManifoldSpec(N=args.N, m=args.m, selection=args.selection, selection_seed=args.selection_seed,
                               exclude_dc=not args.allow_dc, coeff_law=args.coeff_law, scale=args.scale,
                               alpha=args.alpha, dataset_seed=args.seed)
    images, modes = make_fourier_dataset(spec, args.n)
    header = {"kind": "fourier", "fourier": spec.to_dict(), "mode_set": modes.to_dict(),
              "real_dof": modes.real_dof, "m": spec.m}
    write_dataset(args.out, images, header)
    print(f"wrote {args.n} images ({spec.N}x{spec.N}, m={spec.m}, real dof={modes.real_dof}) to {args.out}")
    return 0


def oracle_checks(seed=0):
    """Analytic identities; returns ``[(name, passed, detail)]``."""
    rng = np.random.default_rng(seed)
    t = rng.uniform(0.01, 0.99, 100)
    tau = rng.uniform(0.2, 5.0, 100)
    checks = []
    prod = oracle.optimal_weight(t, tau) * oracle.posterior_variance(t, tau)
    err = float(np.max(np.abs(prod - 1.0)))
    checks.append(("optimal_weight * posterior_variance == 1", err <= 1e-12, f"max err {err:.2e}"))
    noise = WeightingScheme("noise")
    ow = oracle.optimal_weight(t, tau)
    # relative to the weight itself: w_noise reaches ~1e4 near t=1, where one ulp is ~2e-12
    err = float(np.max(np.abs(ow - noise(t) - 1.0 / tau ** 2) / np.maximum(1.0, ow)))
    checks.append(("optimal_weight - w_noise == 1/tau^2", err <= 1e-12, f"max rel err {err:.2e}"))
    x = rng.standard_normal((100, 3))
    lhs = oracle.ideal_denoiser_gaussian(x, t, tau[:, None])
    rhs = oracle.posterior_mean_coeff(t, tau)[:, None] * x / t[:, None]
    err = float(np.max(np.abs(lhs - rhs)))
    checks.append(("stable vs textbook posterior mean", err <= 1e-12, f"max err {err:.2e}"))
    w = WeightingScheme.parse("w_classic:19")
    checks.append(("classic t_min = 0.05", abs(w.t_min - 0.05) < 1e-15 and w(0.04) == 0.0, f"t_min {w.t_min}"))
    return checks


def oracle_table(taus, ts):
    """Rows ``(tau, t, coeff, posterior_variance, optimal_weight)``."""
    return [(tau, t, float(oracle.posterior_mean_coeff(t, tau)), float(oracle.posterior_variance(t, tau)),
             float(oracle.optimal_weight(t, tau))) for tau in taus for t in ts]


def cmd_oracle_check(args):
    taus = [float(v) for v in args.taus.split(",")]
    ts = [float(v) for v in args.ts.split(",")]
    print("tau,t,coeff,posterior_variance,optimal_weight")
    for row in oracle_table(taus, ts):
        print(",".join(repr(v) for v in row))
    print()
    ok = True
    for name, passed, detail in oracle_checks(args.seed):
        ok &= passed
        print(f"[{'PASS' if passed else 'FAIL'}] {name} ({detail})")
    return 0 if ok else 1


def build_parser():
    p = argparse.ArgumentParser(prog="flowden", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True)

    s = sub.add_parser("train", help="train one run from a JSON RunConfig")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("grid", help="run a JSON GridSpec and emit CSV/SVG reports")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_grid)

    s = sub.add_parser("sample", help="generate samples from a checkpoint")
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--count", type=int, default=256)
    s.add_argument("--steps", type=int, default=200)
    s.add_argument("--method", choices=["euler", "heun"], default="euler")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--raw", action="store_true", help="use raw instead of EMA parameters")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("eval-psnr", help="PSNR curve (and optional delta vs a second checkpoint)")
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--compare")
    s.add_argument("--grid", default="0.1,0.3,0.6,0.9,0.95")
    s.add_argument("--n", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--split", choices=["test", "train"], default="test")
    s.add_argument("--raw", action="store_true")
    s.add_argument("--out")
    s.set_defaults(func=cmd_eval_psnr)

    s = sub.add_parser("gen-dataset", help="write a Fourier-manifold dataset file")
    s.add_argument("--N", type=int, default=32)
    s.add_argument("--m", type=int, default=4)
    s.add_argument("--n", type=int, default=1000)
    s.add_argument("--selection", choices=["lowfreq", "seeded-random"], default="lowfreq")
    s.add_argument("--selection-seed", type=int, default=0)
    s.add_argument("--allow-dc", action="store_true")
    s.add_argument("--coeff-law", choices=["gaussian", "uniform"], default="gaussian")
    s.add_argument("--scale", type=float, default=1.0)
    s.add_argument("--alpha", type=float, default=2.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_gen_dataset)

    s = sub.add_parser("oracle-check", help="tabulate the Gaussian oracle and verify its identities")
    s.add_argument("--taus", default="0.5,1,1.5,2")
    s.add_argument("--ts", default="0.1,0.3,0.5,0.7,0.9,0.99")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_oracle_check)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
