"""Independent oracles shared by the test modules."""
import numpy as np

from flowden.nn import Tape


def central_diff(f, x, h=1e-5):
    """Central finite differences of scalar ``f`` at array ``x``."""
    x = np.array(x, dtype=np.float64)
    g = np.zeros_like(x)
    flat = x.reshape(-1)
    gf = g.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + h
        fp = f(x)
        flat[i] = old - h
        fm = f(x)
        flat[i] = old
        gf[i] = (fp - fm) / (2 * h)
    return g


def rel_err(a, b, floor=1e-6):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return float(np.max(np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)))


def tape_grads(fn, arrays):
    """Reverse-mode gradients of scalar ``fn(*tensors)`` w.r.t. each array."""
    tape = Tape()
    leaves = [tape.watch(a) for a in arrays]
    out = fn(*leaves)
    return float(out.data), tape.gradient(out, leaves)


def fd_check(fn, arrays, h=1e-5):
    """Max relative error between tape gradients and central differences over all inputs."""
    _, grads = tape_grads(fn, arrays)
    worst = 0.0
    for i, a in enumerate(arrays):
        def f(xi, i=i):
            args = list(arrays)
            args[i] = xi
            out = fn(*args)
            return float(np.asarray(getattr(out, "data", out)))

        worst = max(worst, rel_err(grads[i], central_diff(f, a, h)))
    return worst


ACCEPTANCE = []  # (criterion, passed, detail), printed by conftest at the end of the session


def report(n, ok, detail):
    line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(line, flush=True)
    ACCEPTANCE.append((n, bool(ok), detail))
    return ok
