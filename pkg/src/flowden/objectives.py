"""Weighted denoising objective: interpolation, time weightings, output parametrizations.

Every training loss here is ``E[w(t) * ||D(x_t, t) - x1||^2]`` where ``w`` is a
:class:`WeightingScheme` and ``D`` is built from the raw network output by a
:class:`ParamClass`. Weighting and class are chosen independently.
"""
from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NonFiniteError, ShapeError
from .nn import tensor as ops

T_LO = 1e-3
T_HI = 1.0 - 1e-3
T_CLAMP = 1e-3


class ClampWarning(UserWarning):
    """A time value was moved into the safe range before a division."""


def _t_like(t, x):
    """Reshape scalar or per-sample times so they broadcast against ``x``."""
    t = np.asarray(t, dtype=np.float64)
    x = np.asarray(x)
    if t.ndim == 0:
        return t
    if t.shape[0] != x.shape[0]:
        raise ShapeError("time", t.shape, x.shape, detail="one time per sample expected")
    return t.reshape(t.shape + (1,) * (x.ndim - t.ndim))


# ---------------------------------------------------------------------------
# weightings
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeightingScheme:
    """Time weighting ``w(t) = t**a * (1 - t)**b``, optionally cut below ``t_min``.

    Tags: ``den`` (1), ``vel`` ((1-t)^-2), ``noise`` (t^2 (1-t)^-2, the SNR),
    ``classic`` (t^-2 on [1/(1+sigma_max), 1]) and ``power`` ((1-t)^-p).
    """

    tag: str
    sigma_max: float | None = None
    p: float | None = None

    def __post_init__(self):
        if self.tag not in ("den", "vel", "noise", "classic", "power"):
            raise ConfigError(f"unknown weighting tag {self.tag!r}")
        if self.tag == "classic" and not (self.sigma_max is not None and self.sigma_max > 0):
            raise ConfigError("classic weighting needs sigma_max > 0")
        if self.tag == "power" and not (self.p is not None and self.p > 0):
            raise ConfigError("power weighting needs p > 0")

    @classmethod
    def parse(cls, text):
        """Parse ``w_den | w_vel | w_noise | w_classic:SIGMA | w_pow:P``."""
        name, _, arg = text.strip().partition(":")
        try:
            if name == "w_den" and not arg:
                return cls("den")
            if name == "w_vel" and not arg:
                return cls("vel")
            if name == "w_noise" and not arg:
                return cls("noise")
            if name == "w_classic":
                return cls("classic", sigma_max=float(arg) if arg else 19.0)
            if name == "w_pow" and arg:
                return cls("power", p=float(arg))
        except ValueError:
            pass
        raise ConfigError(f"cannot parse weighting {text!r}")

    def __str__(self):
        if self.tag == "classic":
            return f"w_classic:{_fmt_num(self.sigma_max)}"
        if self.tag == "power":
            return f"w_pow:{_fmt_num(self.p)}"
        return f"w_{self.tag}"

    @property
    def exponents(self):
        return {
            "den": (0.0, 0.0),
            "vel": (0.0, -2.0),
            "noise": (2.0, -2.0),
            "classic": (-2.0, 0.0),
            "power": (0.0, -(self.p or 0.0)),
        }[self.tag]

    @property
    def t_min(self):
        return 1.0 / (1.0 + self.sigma_max) if self.tag == "classic" else 0.0

    def support(self, t):
        t = np.asarray(t, dtype=np.float64)
        return (t >= self.t_min).astype(np.float64)

    def __call__(self, t):
        return weight_value(self, t)


def _fmt_num(x):
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def weight_value(w, t):
    """Evaluate ``w`` at ``t`` (scalar or array). Endpoints where it diverges are rejected."""
    t = np.asarray(t, dtype=np.float64)
    a, b = w.exponents
    if np.any((t < 0) | (t > 1)):
        raise ConfigError("weighting evaluated outside [0, 1]")
    if (a < 0 and np.any(t == 0)) or (b < 0 and np.any(t == 1)):
        raise ConfigError(f"{w} diverges at the time endpoints; clamp t first")
    with np.errstate(divide="ignore"):
        out = np.power(t, a) * np.power(1.0 - t, b) * w.support(t)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# parametrization classes
# ---------------------------------------------------------------------------


class ParamClass(enum.Enum):
    """How the network output ``N`` becomes a denoiser ``D``.

    CDen: ``D = N``; CVel: ``D = x + (1-t) N``; CNoise: ``D = (x - (1-t) N) / t``.
    """

    CDen = "c_den"
    CVel = "c_vel"
    CNoise = "c_noise"

    @classmethod
    def parse(cls, text):
        try:
            return cls(text.strip())
        except ValueError:
            raise ConfigError(f"cannot parse parametrization class {text!r}") from None

    def __str__(self):
        return self.value

    @property
    def residual_exponents(self):
        # D - x1 = s(t) * (N - target); these are the exponents of s(t)**2
        return {
            ParamClass.CDen: (0.0, 0.0),
            ParamClass.CVel: (0.0, 2.0),
            ParamClass.CNoise: (-2.0, 2.0),
        }[self]

    def regression_target(self, x0, x1):
        if self is ParamClass.CDen:
            return x1
        if self is ParamClass.CVel:
            return x1 - x0
        return x0


@dataclass
class InterpolantSample:
    x0: np.ndarray
    x1: np.ndarray
    t: np.ndarray
    xt: np.ndarray

    def __len__(self):
        return self.x1.shape[0]


def interpolate(x0, x1, t):
    """``x_t = (1 - t) x0 + t x1`` with ``t`` scalar or one value per sample."""
    x0 = np.asarray(x0, dtype=np.float64)
    x1 = np.asarray(x1, dtype=np.float64)
    if x0.shape != x1.shape:
        raise ShapeError("interpolate", x0.shape, x1.shape)
    t_arr = np.asarray(t, dtype=np.float64)
    if np.any((t_arr < 0) | (t_arr > 1)):
        raise ConfigError("interpolation time outside [0, 1]")
    tb = _t_like(t_arr, x0)
    xt = (1.0 - tb) * x0 + tb * x1
    return InterpolantSample(x0=x0, x1=x1, t=t_arr, xt=xt)


def _clamp(t, lo, hi, what):
    t = np.asarray(t, dtype=np.float64)
    c = np.clip(t, lo, hi)
    if np.any(c != t):
        warnings.warn(f"{what}: time clamped to [{lo}, {hi}]", ClampWarning, stacklevel=3)
    return c


def denoiser_from_output(cls, n_out, x, t, t_floor=T_CLAMP):
    """Denoiser induced by ``cls`` around network output ``n_out``.

    Works on arrays and on tape tensors (``n_out`` may be a Tensor).
    """
    xv = np.asarray(ops.value(x))
    if cls is ParamClass.CDen:
        return n_out
    if cls is ParamClass.CVel:
        tb = _t_like(t, xv)
        return ops.add(x, ops.mul(n_out, 1.0 - tb))
    t = _clamp(t, t_floor, 1.0, "CNoise denoiser")
    tb = _t_like(t, xv)
    return ops.mul(ops.sub(x, ops.mul(n_out, 1.0 - tb)), 1.0 / tb)


def velocity_from_denoiser(d, x, t, t_floor=T_CLAMP):
    """``v = (D - x) / (1 - t)``."""
    t = _clamp(t, 0.0, 1.0 - t_floor, "velocity_from_denoiser")
    tb = _t_like(t, np.asarray(x))
    return (np.asarray(d) - np.asarray(x)) / (1.0 - tb)


def noise_from_denoiser(d, x, t, t_floor=T_CLAMP):
    """``eps = (x - t D) / (1 - t)``."""
    t = _clamp(t, 0.0, 1.0 - t_floor, "noise_from_denoiser")
    tb = _t_like(t, np.asarray(x))
    return (np.asarray(x) - tb * np.asarray(d)) / (1.0 - tb)


def loss_factor(weighting, cls, t):
    """Analytic ``w(t) * s(t)**2`` so canonical pairs reduce to exactly 1."""
    t = np.asarray(t, dtype=np.float64)
    a, b = weighting.exponents
    c, d = cls.residual_exponents
    with np.errstate(divide="ignore"):
        out = np.power(t, a + c) * np.power(1.0 - t, b + d) * weighting.support(t)
    return out


def unified_loss(batch, model_fn, cls, weighting):
    """Mean over the batch of ``w(t) ||D(x_t, t) - x1||^2`` in factorized form.

    ``model_fn(xt, t)`` returns the raw network output (array or tape tensor).
    Uses ``D - x1 = s(t) (N - target)`` with ``target`` in {x1, x1 - x0, x0}.
    """
    if len(batch) == 0:
        raise ConfigError("empty batch")
    n_out = model_fn(batch.xt, batch.t)
    target = cls.regression_target(batch.x0, batch.x1)
    core = ops.sub(n_out, target)
    axes = tuple(range(1, batch.x1.ndim))
    per_sample = ops.sum(ops.square(core), axis=axes) if axes else ops.square(core)
    factor = loss_factor(weighting, cls, np.broadcast_to(batch.t, (len(batch),)))
    loss = ops.mean(ops.mul(per_sample, factor))
    if not np.isfinite(ops.value(loss)):
        tv = np.asarray(batch.t)
        raise NonFiniteError("non-finite loss", t_min=float(tv.min()), t_max=float(tv.max()),
                             param_class=str(cls), weighting=str(weighting))
    return loss


def sample_time(rng, t_lo=T_LO, t_hi=T_HI, size=None):
    """Uniform draw(s) on ``[t_lo, t_hi]``."""
    if not (0.0 <= t_lo < t_hi <= 1.0):
        raise ConfigError(f"need 0 <= t_lo < t_hi <= 1, got [{t_lo}, {t_hi}]")
    return rng.uniform(t_lo, t_hi, size=size)
