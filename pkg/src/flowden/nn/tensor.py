"""Tape-based reverse-mode automatic differentiation over float64 numpy arrays.

Operations accept :class:`Tensor` objects (recorded on their tape) or plain
array-likes (treated as constants). When no operand is a :class:`Tensor` an
operation simply returns an ``ndarray``, so the same model code runs untaped
for evaluation.
"""
from __future__ import annotations

import numpy as np

from .. import kernels
from ..errors import NonFiniteError, ShapeError, UsageError


class Tensor:
    __slots__ = ("data", "tape", "id")
    __array_ufunc__ = None  # make ``ndarray <op> Tensor`` fall through to the reflected method

    def __init__(self, data, tape, id):
        self.data = data
        self.tape = tape
        self.id = id

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def numpy(self):
        return self.data

    def __repr__(self):
        return f"Tensor(id={self.id}, shape={self.data.shape})"

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return affine(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)


class Tape:
    """Ordered record of primitive operations.

    Each entry holds the output id, the input ids (``None`` for constants) and
    a closure mapping the output cotangent to input cotangents.
    """

    def __init__(self, check_finite=True):
        self.check_finite = check_finite
        self._ops = []
        self._next_id = 0
        self.output = None
        self.leaves = []

    def __len__(self):
        return len(self._ops)

    def clear(self):
        """Drop recorded ops. Closures and tensors form cycles through the tape,
        so without this a discarded tape waits for the cyclic GC."""
        self._ops.clear()
        self.output = None
        self.leaves = []

    def _new_id(self):
        i = self._next_id
        self._next_id += 1
        return i

    def watch(self, value):
        """Register a leaf (input or parameter) and return its tensor."""
        data = np.array(value, dtype=np.float64, copy=True)
        if self.check_finite and not np.all(np.isfinite(data)):
            raise NonFiniteError("non-finite leaf value")
        return Tensor(data, self, self._new_id())

    def record(self, name, out, inputs, vjp):
        if self.check_finite and not np.all(np.isfinite(out)):
            raise NonFiniteError(f"non-finite output of {name}")
        in_ids = tuple(x.id if isinstance(x, Tensor) else None for x in inputs)
        t = Tensor(out, self, self._new_id())
        self._ops.append((t.id, in_ids, vjp))
        return t

    def backward(self, output, seed=None):
        """Reverse sweep from ``output``. Returns ``{tensor id: gradient}``."""
        if not isinstance(output, Tensor) or output.tape is not self:
            raise UsageError("backward needs a tensor recorded on this tape")
        if seed is None:
            if output.data.size != 1:
                raise UsageError("seed gradient required for non-scalar output")
            seed = np.ones_like(output.data)
        seed = np.asarray(seed, dtype=np.float64)
        if seed.shape != output.data.shape:
            raise ShapeError("backward", seed.shape, output.data.shape, detail="seed vs output")
        grads = {output.id: seed}
        for out_id, in_ids, vjp in reversed(self._ops):
            if out_id > output.id:
                continue
            g = grads.pop(out_id, None)
            if g is None:
                continue
            in_grads = vjp(g)
            for i, gi in zip(in_ids, in_grads):
                if i is None or gi is None:
                    continue
                if i in grads:
                    grads[i] = grads[i] + gi
                else:
                    grads[i] = gi
        return grads

    def gradient(self, output, sources, seed=None):
        """Gradients of ``output`` w.r.t. each tensor in ``sources`` (zeros when unused)."""
        grads = self.backward(output, seed)
        return [grads.get(s.id, np.zeros_like(s.data)) for s in sources]


def forward(tape, graph_fn, *inputs):
    """Watch ``inputs``, run ``graph_fn`` on them and remember the output for :func:`backward`."""
    leaves = [tape.watch(x) for x in inputs]
    out = graph_fn(*leaves)
    if not isinstance(out, Tensor):
        out = tape.record("identity", np.asarray(out, dtype=np.float64), (), lambda g: ())
    tape.output = out
    tape.leaves = leaves
    return out


def backward(tape, seed_gradient=None):
    """Gradients w.r.t. the inputs of the last :func:`forward` on ``tape``."""
    if tape.output is None:
        raise UsageError("backward called before forward")
    return tape.gradient(tape.output, tape.leaves, seed_gradient)


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _tape_of(*xs):
    tape = None
    for x in xs:
        if isinstance(x, Tensor):
            if tape is None:
                tape = x.tape
            elif x.tape is not tape:
                raise UsageError("operands recorded on different tapes")
    return tape


def value(x):
    """Underlying array of a tensor or array-like."""
    if isinstance(x, Tensor):
        return x.data
    return np.asarray(x, dtype=np.float64)


def _unbroadcast(g, shape):
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


def _broadcast_check(op, a, b):
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(op, a.shape, b.shape) from None


def _emit(name, out, inputs, vjp):
    tape = _tape_of(*inputs)
    if tape is None:
        return out
    return tape.record(name, out, inputs, vjp)


# ---------------------------------------------------------------------------
# primitives
# ---------------------------------------------------------------------------


def add(a, b):
    av, bv = value(a), value(b)
    _broadcast_check("add", av, bv)
    return _emit("add", av + bv, (a, b),
                 lambda g: (_unbroadcast(g, av.shape), _unbroadcast(g, bv.shape)))


def sub(a, b):
    av, bv = value(a), value(b)
    _broadcast_check("sub", av, bv)
    return _emit("sub", av - bv, (a, b),
                 lambda g: (_unbroadcast(g, av.shape), -_unbroadcast(g, bv.shape)))


def mul(a, b):
    av, bv = value(a), value(b)
    _broadcast_check("mul", av, bv)
    return _emit("mul", av * bv, (a, b),
                 lambda g: (_unbroadcast(g * bv, av.shape), _unbroadcast(g * av, bv.shape)))


def square(x):
    xv = value(x)
    return _emit("square", xv * xv, (x,), lambda g: (2.0 * g * xv,))


def affine(x, scale=1.0, shift=0.0):
    """``scale * x + shift`` with scalar constants."""
    xv = value(x)
    return _emit("affine", scale * xv + shift, (x,), lambda g: (scale * g,))


def matmul(a, b):
    av, bv = value(a), value(b)
    if av.ndim < 2 or bv.ndim < 2:
        raise ShapeError("matmul", av.shape, bv.shape, detail="operands need at least 2 dims")
    if av.shape[-1] != bv.shape[-2]:
        raise ShapeError("matmul", av.shape, bv.shape, detail="inner dimensions differ")
    try:
        np.broadcast_shapes(av.shape[:-2], bv.shape[:-2])
    except ValueError:
        raise ShapeError("matmul", av.shape, bv.shape, detail="batch dimensions") from None

    def vjp(g):
        ga = _unbroadcast(g @ np.swapaxes(bv, -1, -2), av.shape) if isinstance(a, Tensor) else None
        gb = None
        if isinstance(b, Tensor):
            if bv.ndim == 2 and av.ndim > 2:
                # fold batch dims into one GEMM instead of summing a (B, k, n) stack
                gb = av.reshape(-1, av.shape[-1]).T @ g.reshape(-1, g.shape[-1])
            else:
                gb = _unbroadcast(np.swapaxes(av, -1, -2) @ g, bv.shape)
        return ga, gb

    return _emit("matmul", av @ bv, (a, b), vjp)


def tanh(x):
    xv = value(x)
    out = np.tanh(xv)
    return _emit("tanh", out, (x,), lambda g: (g * (1.0 - out * out),))


def relu(x):
    xv = value(x)
    mask = xv > 0
    return _emit("relu", np.where(mask, xv, 0.0), (x,), lambda g: (g * mask,))


def gelu(x):
    xv = value(x)
    return _emit("gelu", kernels.gelu_forward(xv), (x,), lambda g: (kernels.gelu_backward(xv, g),))


def layer_norm(x, gamma=None, beta=None, eps=1e-5):
    """Normalize over the last axis, then scale by ``gamma`` and shift by ``beta``."""
    xv = value(x)
    n = xv.shape[-1]
    for p in (gamma, beta):
        if p is not None and value(p).shape != (n,):
            raise ShapeError("layer_norm", xv.shape, value(p).shape, detail="affine params must match last axis")
    x2 = xv.reshape(-1, n)
    xhat2, rstd = kernels.layer_norm_forward(x2, eps)
    xhat = xhat2.reshape(xv.shape)
    gv = value(gamma) if gamma is not None else None
    out = xhat * gv if gv is not None else xhat.copy()
    if beta is not None:
        out = out + value(beta)

    def vjp(g):
        g2 = g.reshape(-1, n)
        gxhat = g2 * gv if gv is not None else g2
        gx = kernels.layer_norm_backward(gxhat, xhat2, rstd).reshape(xv.shape)
        ggamma = (g2 * xhat2).sum(axis=0) if isinstance(gamma, Tensor) else None
        gbeta = g2.sum(axis=0) if isinstance(beta, Tensor) else None
        return gx, ggamma, gbeta

    return _emit("layer_norm", out, (x, gamma, beta), vjp)


def reshape(x, shape):
    xv = value(x)
    try:
        out = xv.reshape(shape)
    except ValueError:
        raise ShapeError("reshape", xv.shape, tuple(shape)) from None
    return _emit("reshape", out, (x,), lambda g: (g.reshape(xv.shape),))


def transpose(x, axes):
    xv = value(x)
    axes = tuple(axes)
    inv = tuple(np.argsort(axes))
    return _emit("transpose", np.transpose(xv, axes), (x,), lambda g: (np.transpose(g, inv),))


def swapaxes(x, a1, a2):
    axes = list(range(value(x).ndim))
    axes[a1], axes[a2] = axes[a2], axes[a1]
    return transpose(x, axes)


def concat(xs, axis=-1):
    vals = [value(x) for x in xs]
    try:
        out = np.concatenate(vals, axis=axis)
    except ValueError:
        raise ShapeError("concat", *(v.shape for v in vals)) from None
    sizes = np.cumsum([v.shape[axis] for v in vals])[:-1]

    def vjp(g):
        return tuple(np.split(g, sizes, axis=axis))

    return _emit("concat", out, tuple(xs), vjp)


def sum(x, axis=None, keepdims=False):
    xv = value(x)
    out = np.sum(xv, axis=axis, keepdims=keepdims)

    def vjp(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, xv.shape).copy(),)

    return _emit("sum", np.asarray(out, dtype=np.float64), (x,), vjp)


def mean(x, axis=None, keepdims=False):
    xv = value(x)
    if axis is None:
        count = xv.size
    else:
        axes = (axis,) if np.isscalar(axis) else axis
        count = int(np.prod([xv.shape[a] for a in axes]))
    return affine(sum(x, axis=axis, keepdims=keepdims), 1.0 / count)


def _patchify_array(xv, p):
    *lead, n1, n2 = xv.shape
    if n1 != n2:
        raise ShapeError("patchify", xv.shape, detail="image must be square")
    if p <= 0 or n1 % p:
        raise ShapeError("patchify", xv.shape, detail=f"patch size {p} does not divide {n1}")
    k = n1 // p
    y = xv.reshape(*lead, k, p, k, p)
    nl = len(lead)
    y = np.moveaxis(y, nl + 2, nl + 1)
    return y.reshape(*lead, k * k, p * p)


def _unpatchify_array(tv, p):
    *lead, tokens, pp = tv.shape
    k = int(round(np.sqrt(tokens)))
    if k * k != tokens or pp != p * p:
        raise ShapeError("unpatchify", tv.shape, detail=f"not a square tiling with patch {p}")
    nl = len(lead)
    y = tv.reshape(*lead, k, k, p, p)
    y = np.moveaxis(y, nl + 1, nl + 2)
    return y.reshape(*lead, k * p, k * p)


def patchify(x, p):
    """``(..., N, N)`` image to ``(..., (N/p)**2, p*p)`` row-major non-overlapping tokens."""
    out = _patchify_array(value(x), p)
    return _emit("patchify", out, (x,), lambda g: (_unpatchify_array(g, p),))


def unpatchify(x, p):
    out = _unpatchify_array(value(x), p)
    return _emit("unpatchify", out, (x,), lambda g: (_patchify_array(g, p),))
