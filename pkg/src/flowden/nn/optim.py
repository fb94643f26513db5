"""Adam and parameter EMA over a named parameter store."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, NonFiniteError, ShapeError

DEFAULT_BETA1 = 0.9
DEFAULT_BETA2 = 0.999
DEFAULT_EPS = 1e-8
DEFAULT_EMA_DECAY = 0.999


@dataclass
class ParamStore:
    """Named float64 parameters with Adam moments and an optional EMA shadow."""

    params: dict[str, np.ndarray]
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0
    ema: dict[str, np.ndarray] | None = None

    def __post_init__(self):
        self.params = {k: np.array(p, dtype=np.float64) for k, p in self.params.items()}
        for k, p in self.params.items():
            self.m.setdefault(k, np.zeros_like(p))
            self.v.setdefault(k, np.zeros_like(p))

    def names(self):
        return list(self.params)

    def num_params(self):
        return int(sum(p.size for p in self.params.values()))

    def copy(self):
        return ParamStore(
            params={k: p.copy() for k, p in self.params.items()},
            m={k: a.copy() for k, a in self.m.items()},
            v={k: a.copy() for k, a in self.v.items()},
            step=self.step,
            ema=None if self.ema is None else {k: a.copy() for k, a in self.ema.items()},
        )

    def init_ema(self):
        self.ema = {k: p.copy() for k, p in self.params.items()}


def adam_step(store, grads, lr, beta1=DEFAULT_BETA1, beta2=DEFAULT_BETA2, eps=DEFAULT_EPS):
    """One bias-corrected Adam update, in place. Returns ``store``.

    A non-finite gradient aborts the step before anything is modified.
    """
    for k, p in store.params.items():
        g = grads.get(k)
        if g is None:
            continue
        if g.shape != p.shape:
            raise ShapeError("adam_step", g.shape, p.shape, detail=k)
        if not np.all(np.isfinite(g)):
            raise NonFiniteError("non-finite gradient", step=store.step, param=k)
    store.step += 1
    c1 = 1.0 - beta1 ** store.step
    c2 = 1.0 - beta2 ** store.step
    for k, p in store.params.items():
        g = grads.get(k)
        if g is None:
            continue
        m = store.m[k]
        v = store.v[k]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
    return store


def ema_update(store, decay=DEFAULT_EMA_DECAY):
    """``shadow <- decay * shadow + (1 - decay) * param``; shadow starts at the params."""
    if not 0.0 <= decay < 1.0:
        raise ConfigError(f"EMA decay must lie in [0, 1), got {decay}")
    if store.ema is None:
        store.init_ema()
    for k, p in store.params.items():
        s = store.ema[k]
        s *= decay
        s += (1.0 - decay) * p
    return store
