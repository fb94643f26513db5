"""Desk-scale networks: a global MLP and an MLP-Mixer over non-overlapping patches.

The mixer's patch size is the locality knob: small patches give many tokens
with cheap per-token identity maps, large patches give few wide tokens.
Both models take ``(x, t)`` and return an output with the shape of ``x``;
the final layer is zero-initialized.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError, ShapeError
from .nn import tensor as ops

_ACTIVATIONS = {"gelu": ops.gelu, "relu": ops.relu, "tanh": ops.tanh}


@dataclass(frozen=True)
class ModelSpec:
    variant: str
    input_shape: tuple
    time_embed_dim: int = 32
    time_max_freq: float = 16.0
    # mlp
    hidden_dims: tuple = (256, 256)
    activation: str = "gelu"
    # mixer
    patch: int = 4
    embed_dim: int = 64
    depth: int = 2
    token_mix: int = 64
    channel_mix: int = 128
    pos_embed: bool = True

    def __post_init__(self):
        object.__setattr__(self, "input_shape", tuple(int(v) for v in self.input_shape))
        object.__setattr__(self, "hidden_dims", tuple(int(v) for v in self.hidden_dims))
        if self.variant not in ("mlp", "mixer"):
            raise ConfigError(f"unknown model variant {self.variant!r}")
        if self.activation not in _ACTIVATIONS:
            raise ConfigError(f"unknown activation {self.activation!r}")
        if not self.time_max_freq >= 0.25:
            raise ConfigError("time_max_freq must be at least 0.25")
        if self.time_embed_dim < 0 or self.time_embed_dim % 2:
            raise ConfigError("time_embed_dim must be a nonnegative even integer")
        if self.variant == "mixer":
            if len(self.input_shape) != 2 or self.input_shape[0] != self.input_shape[1]:
                raise ConfigError("mixer needs square (N, N) inputs")
            n = self.input_shape[0]
            if self.patch <= 0 or n % self.patch:
                raise ConfigError(f"patch size {self.patch} must divide {n}")
            if self.num_tokens != (n // self.patch) ** 2:
                raise ConfigError("token count mismatch")

    @property
    def dim(self):
        return int(np.prod(self.input_shape))

    @property
    def num_tokens(self):
        return (self.input_shape[0] // self.patch) ** 2

    @property
    def label(self):
        if self.variant == "mlp":
            return "mlp"
        return f"mixer/{self.patch}"

    def to_dict(self):
        d = asdict(self)
        d["input_shape"] = list(self.input_shape)
        d["hidden_dims"] = list(self.hidden_dims)
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def time_embedding(t, dim, max_freq=16.0):
    """Sinusoidal features of ``t`` at geometrically spaced frequencies.

    The lowest frequency is a quarter turn over [0, 1], which keeps the map
    injective on the unit interval.
    """
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    if dim == 0:
        return np.zeros((t.shape[0], 0))
    half = dim // 2
    freqs = np.geomspace(0.25, max(max_freq, 0.25), half) if half > 1 else np.array([0.25])
    ang = 2.0 * np.pi * t[:, None] * freqs[None, :]
    return np.concatenate([np.sin(ang), np.cos(ang)], axis=1)


def param_shapes(spec):
    shapes = {}
    e_t = spec.time_embed_dim
    if spec.variant == "mlp":
        fan_in = spec.dim + e_t
        for i, h in enumerate(spec.hidden_dims):
            shapes[f"mlp.{i}.w"] = (fan_in, h)
            shapes[f"mlp.{i}.b"] = (h,)
            fan_in = h
        shapes["mlp.out.w"] = (fan_in, spec.dim)
        shapes["mlp.out.b"] = (spec.dim,)
        return shapes
    pp = spec.patch * spec.patch
    e, tok = spec.embed_dim, spec.num_tokens
    shapes["embed.w"] = (pp + e_t, e)
    shapes["embed.b"] = (e,)
    if spec.pos_embed:
        shapes["embed.pos"] = (tok, e)
    for i in range(spec.depth):
        shapes[f"block{i}.ln1.g"] = (e,)
        shapes[f"block{i}.ln1.b"] = (e,)
        shapes[f"block{i}.tok1.w"] = (tok, spec.token_mix)
        shapes[f"block{i}.tok1.b"] = (spec.token_mix,)
        shapes[f"block{i}.tok2.w"] = (spec.token_mix, tok)
        shapes[f"block{i}.tok2.b"] = (tok,)
        shapes[f"block{i}.ln2.g"] = (e,)
        shapes[f"block{i}.ln2.b"] = (e,)
        shapes[f"block{i}.ch1.w"] = (e, spec.channel_mix)
        shapes[f"block{i}.ch1.b"] = (spec.channel_mix,)
        shapes[f"block{i}.ch2.w"] = (spec.channel_mix, e)
        shapes[f"block{i}.ch2.b"] = (e,)
    shapes["head.ln.g"] = (e,)
    shapes["head.ln.b"] = (e,)
    shapes["head.w"] = (e, pp)
    shapes["head.b"] = (pp,)
    return shapes


def param_count(spec):
    return int(sum(math.prod(s) for s in param_shapes(spec).values()))


def init_params(spec, rng):
    """Gaussian fan-in init for weights, ones for norm gains, zeros for biases and the output layer."""
    params = {}
    for name, shape in param_shapes(spec).items():
        if name in ("mlp.out.w", "head.w"):
            params[name] = np.zeros(shape)
        elif name.endswith(".w"):
            params[name] = rng.standard_normal(shape) / np.sqrt(shape[0])
        elif name.endswith(".g"):
            params[name] = np.ones(shape)
        elif name == "embed.pos":
            params[name] = 0.02 * rng.standard_normal(shape)
        else:
            params[name] = np.zeros(shape)
    return params


def _check_input(spec, x):
    xs = ops.value(x).shape
    if tuple(xs[1:]) != spec.input_shape:
        raise ShapeError("model_forward", xs, spec.input_shape, detail="input shape")


def model_forward(spec, params, x, t):
    """Network output for a batch ``x`` of shape ``(B, *input_shape)``.

    ``params`` values may be arrays or tape tensors; ``t`` is a scalar or ``(B,)``.
    """
    _check_input(spec, x)
    b = ops.value(x).shape[0]
    t = np.broadcast_to(np.asarray(t, dtype=np.float64), (b,))
    emb = time_embedding(t, spec.time_embed_dim, spec.time_max_freq)
    if spec.variant == "mlp":
        return _mlp_forward(spec, params, x, emb)
    return _mixer_forward(spec, params, x, emb)


def _mlp_forward(spec, params, x, emb):
    act = _ACTIVATIONS[spec.activation]
    b = ops.value(x).shape[0]
    h = ops.reshape(x, (b, spec.dim))
    if spec.time_embed_dim:
        h = ops.concat([h, emb], axis=1)
    for i in range(len(spec.hidden_dims)):
        h = act(ops.add(ops.matmul(h, params[f"mlp.{i}.w"]), params[f"mlp.{i}.b"]))
    out = ops.add(ops.matmul(h, params["mlp.out.w"]), params["mlp.out.b"])
    return ops.reshape(out, (b,) + spec.input_shape)


def _mixer_forward(spec, params, x, emb):
    act = _ACTIVATIONS[spec.activation]
    b = ops.value(x).shape[0]
    tok_count = spec.num_tokens
    h = ops.patchify(x, spec.patch)
    if spec.time_embed_dim:
        temb = np.broadcast_to(emb[:, None, :], (b, tok_count, emb.shape[1]))
        h = ops.concat([h, temb], axis=-1)
    h = ops.add(ops.matmul(h, params["embed.w"]), params["embed.b"])
    if spec.pos_embed:
        h = ops.add(h, params["embed.pos"])
    for i in range(spec.depth):
        p = f"block{i}."
        y = ops.layer_norm(h, params[p + "ln1.g"], params[p + "ln1.b"])
        y = ops.swapaxes(y, 1, 2)
        y = act(ops.add(ops.matmul(y, params[p + "tok1.w"]), params[p + "tok1.b"]))
        y = ops.add(ops.matmul(y, params[p + "tok2.w"]), params[p + "tok2.b"])
        h = ops.add(h, ops.swapaxes(y, 1, 2))
        y = ops.layer_norm(h, params[p + "ln2.g"], params[p + "ln2.b"])
        y = act(ops.add(ops.matmul(y, params[p + "ch1.w"]), params[p + "ch1.b"]))
        y = ops.add(ops.matmul(y, params[p + "ch2.w"]), params[p + "ch2.b"])
        h = ops.add(h, y)
    y = ops.layer_norm(h, params["head.ln.g"], params["head.ln.b"])
    y = ops.add(ops.matmul(y, params["head.w"]), params["head.b"])
    return ops.unpatchify(y, spec.patch)


def check_param_match(specs, tol=0.1):
    """Raise unless all parameter counts are within ``tol`` of their mean. Returns the counts."""
    counts = {s.label: param_count(s) for s in specs}
    ref = float(np.mean(list(counts.values())))
    for label, c in counts.items():
        if abs(c - ref) > tol * ref:
            raise ConfigError(f"parameter counts not matched within {tol:.0%}: {counts}")
    return counts
