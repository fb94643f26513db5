"""Time the numba and numpy flavours of each hot kernel.

    python3 benchmarks/bench_kernels.py [--repeat 20] [--quick]

Prints one row per kernel with the best-of-repeat time of each flavour and the
speedup. Results depend on the machine; nothing here is asserted.
"""
import argparse
import timeit

import numpy as np

from flowden import kernels


def cases(quick):
    r = np.random.default_rng(0)
    rows = 256 if quick else 4096
    z = r.standard_normal((rows, 32)) + 1j * r.standard_normal((rows, 32))
    x = r.standard_normal((rows, 128))
    g = r.standard_normal((rows, 128))
    logits = r.standard_normal((64 if quick else 1000, 1000)) * 50
    xhat, rstd = kernels.layer_norm_forward_numpy(x, 1e-5)
    return {
        f"fft_rows {z.shape}": lambda f: f["fft_rows"](z, False),
        f"layer_norm_forward {x.shape}": lambda f: f["layer_norm_forward"](x, 1e-5),
        f"layer_norm_backward {x.shape}": lambda f: f["layer_norm_backward"](g, xhat, rstd),
        f"gelu_forward {x.shape}": lambda f: f["gelu_forward"](x),
        f"gelu_backward {x.shape}": lambda f: f["gelu_backward"](x, g),
        f"softmax_rows {logits.shape}": lambda f: f["softmax_rows"](logits),
    }


def flavour(suffix):
    names = ("fft_rows", "layer_norm_forward", "layer_norm_backward", "gelu_forward", "gelu_backward", "softmax_rows")
    return {n: getattr(kernels, f"{n}_{suffix}") for n in names}


def run(repeat=20, quick=False):
    nb, np_ = flavour("numba"), flavour("numpy")
    out = []
    for name, call in cases(quick).items():
        call(nb)  # compile / warm caches
        t_nb = min(timeit.repeat(lambda: call(nb), number=1, repeat=repeat))
        t_np = min(timeit.repeat(lambda: call(np_), number=1, repeat=repeat))
        out.append((name, t_nb, t_np))
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--quick", action="store_true", help="small inputs, for smoke testing")
    args = ap.parse_args()
    print(f"{'kernel':<40} {'numba ms':>10} {'numpy ms':>10} {'speedup':>8}")
    for name, a, b in run(args.repeat, args.quick):
        print(f"{name:<40} {a * 1e3:>10.3f} {b * 1e3:>10.3f} {b / a:>7.2f}x")


if __name__ == "__main__":
    main()
