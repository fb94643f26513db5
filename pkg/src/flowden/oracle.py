"""Closed-form ground truth: the linear-Gaussian posterior and the empirical posterior mean.

Gaussian model: ``x0 ~ N(0, I)``, ``x1 ~ N(0, tau^2 I)``, ``x_t = (1-t) x0 + t x1``.
Given the rescaled observation ``y = x_t / t = x1 + ((1-t)/t) x0`` the
posterior of ``x1`` is Gaussian with mean ``coeff(t) * y`` and variance
``posterior_variance(t)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigError


@dataclass(frozen=True)
class GaussianDataSpec:
    tau: float
    d: int

    def __post_init__(self):
        if not self.tau > 0:
            raise ConfigError(f"tau must be positive, got {self.tau}")
        if int(self.d) < 1:
            raise ConfigError(f"dimension must be >= 1, got {self.d}")


@dataclass
class RescaledObservation:
    y: np.ndarray
    t: float

    @classmethod
    def from_xt(cls, xt, t):
        if not 0.0 < t <= 1.0:
            raise ConfigError("rescaling needs t in (0, 1]")
        return cls(y=np.asarray(xt, dtype=np.float64) / t, t=t)


def _check_open(t):
    t = np.asarray(t, dtype=np.float64)
    if np.any((t <= 0) | (t >= 1)):
        raise ConfigError("t must lie in the open interval (0, 1)")
    return t


def posterior_mean_coeff(t, tau):
    """Shrinkage ``tau^2 / (tau^2 + ((1-t)/t)^2)`` applied to ``y``."""
    t = _check_open(t)
    r = (1.0 - t) / t
    return tau ** 2 / (tau ** 2 + r * r)


def posterior_variance(t, tau):
    """``(1/tau^2 + t^2/(1-t)^2)^-1``."""
    t = _check_open(t)
    return 1.0 / (1.0 / tau ** 2 + (t / (1.0 - t)) ** 2)


def optimal_weight(t, tau):
    """Inverse posterior variance, ``1/tau^2 + t^2/(1-t)^2``."""
    t = _check_open(t)
    return 1.0 / tau ** 2 + (t / (1.0 - t)) ** 2


def _t_col(t, x):
    t = np.asarray(t, dtype=np.float64)
    if t.ndim == 0:
        return t
    return t.reshape(t.shape + (1,) * (np.ndim(x) - t.ndim))


def ideal_denoiser_gaussian(x, t, tau):
    """``E[x1 | x_t = x] = tau^2 t x / (t^2 tau^2 + (1-t)^2)``, valid on all of [0, 1]."""
    x = np.asarray(x, dtype=np.float64)
    t = _t_col(t, x)
    return tau ** 2 * t * x / (t * t * tau ** 2 + (1.0 - t) ** 2)


def ideal_velocity_gaussian(x, t, tau):
    """Exact velocity ``(D* - x)/(1-t)`` with the ``(1-t)`` factor cancelled.

    Equals ``(tau^2 t - (1-t)) x / (t^2 tau^2 + (1-t)^2)``; finite at t = 1.
    """
    x = np.asarray(x, dtype=np.float64)
    t = _t_col(t, x)
    return (tau ** 2 * t - (1.0 - t)) * x / (t * t * tau ** 2 + (1.0 - t) ** 2)


def gaussian_flow_scale(t, tau):
    """Std of the marginal ``x_t``; the exact flow map is ``x(t) = scale(t) x(0)``."""
    t = np.asarray(t, dtype=np.float64)
    return np.sqrt((1.0 - t) ** 2 + (t * tau) ** 2)


def posterior_weights(x, t, dataset):
    """Softmax weights over dataset points for each row of ``x``.

    Logits are ``-||x - t x1_i||^2 / (2 (1-t)^2)``, max-shifted before exponentiation.
    """
    x = np.asarray(x, dtype=np.float64)
    data = np.asarray(dataset, dtype=np.float64)
    if data.shape[0] == 0:
        raise ConfigError("empty dataset")
    t = float(t)
    if not 0.0 < t < 1.0:
        raise ConfigError("t must lie in the open interval (0, 1)")
    xf = x.reshape(x.shape[0], -1)
    df = data.reshape(data.shape[0], -1)
    # ||x - t a||^2 = ||x||^2 - 2t <x, a> + t^2 ||a||^2 ; the ||x||^2 term is row-constant
    logits = (2.0 * t * (xf @ df.T) - t * t * np.sum(df * df, axis=1)) / (2.0 * (1.0 - t) ** 2)
    return kernels.softmax_rows(logits)


def empirical_posterior_denoiser(x, t, dataset):
    """Posterior mean of ``x1`` when ``x1`` is uniform over ``dataset``."""
    data = np.asarray(dataset, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    w = posterior_weights(x, t, data)
    out = w @ data.reshape(data.shape[0], -1)
    return out.reshape(x.shape)
