"""Denoising and sample-quality metrics."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.spatial.distance import cdist
from scipy.stats import spearmanr

from .data.fourier import spectral_residual
from .errors import ConfigError

PEAK = 2.0  # data live in [-1, 1]
PSNR_CAP = 99.0
DEFAULT_GRID = (0.1, 0.3, 0.6, 0.9, 0.95)
DEFAULT_N_EVAL = 1000


def psnr_from_mse(mse, peak=PEAK):
    if mse == 0:
        return PSNR_CAP
    return float(10.0 * np.log10(peak * peak / mse))


def psnr(estimate, reference, peak=PEAK):
    diff = np.asarray(estimate, dtype=np.float64) - np.asarray(reference, dtype=np.float64)
    return psnr_from_mse(float(np.mean(diff * diff)), peak)


@dataclass
class PsnrCurve:
    grid: list
    psnr: list
    n_eval: int
    seed: int
    peak: float = PEAK

    def __post_init__(self):
        if len(self.grid) != len(self.psnr):
            raise ConfigError("time grid and PSNR values are not aligned")

    def __sub__(self, other):
        if list(self.grid) != list(other.grid) or self.seed != other.seed or self.n_eval != other.n_eval:
            raise ConfigError("curves evaluated on different grids, seeds or sizes")
        return PsnrCurve(list(self.grid), [a - b for a, b in zip(self.psnr, other.psnr)],
                         self.n_eval, self.seed, self.peak)

    def mean(self):
        return float(np.mean(self.psnr))

    def to_dict(self):
        return asdict(self)


def psnr_at_t(denoise_fn, eval_set, t, n, rng, peak=PEAK, chunk=250):
    """PSNR of ``denoise_fn(x_t, t)`` against the first ``n`` clean images.

    Noise is drawn from ``rng`` so two calls with equal-state generators see
    identical corruptions.
    """
    eval_set = np.asarray(eval_set, dtype=np.float64)
    if n < 1 or eval_set.shape[0] < n:
        raise ConfigError(f"need at least {max(n, 1)} evaluation images, have {eval_set.shape[0]}")
    x1 = eval_set[:n]
    x0 = rng.standard_normal(x1.shape)
    sq = 0.0
    for s in range(0, n, chunk):
        a, b = x1[s:s + chunk], x0[s:s + chunk]
        xt = (1.0 - t) * b + t * a
        d = np.asarray(denoise_fn(xt, t))
        sq += float(np.sum((d - a) ** 2))
    return psnr_from_mse(sq / x1.size, peak)


def _point_rng(seed, i):
    return np.random.default_rng([int(seed), int(i)])


def psnr_curve(denoise_fn, eval_set, grid=DEFAULT_GRID, n=DEFAULT_N_EVAL, seed=0, peak=PEAK):
    vals = [psnr_at_t(denoise_fn, eval_set, t, n, _point_rng(seed, i), peak) for i, t in enumerate(grid)]
    return PsnrCurve(list(grid), vals, n, seed, peak)


def delta_psnr_curve(den_fn, vel_fn, eval_set, grid=DEFAULT_GRID, n=DEFAULT_N_EVAL, seed=0, peak=PEAK):
    """PSNR(den) - PSNR(vel) with common random numbers; positive favours ``den_fn``."""
    return psnr_curve(den_fn, eval_set, grid, n, seed, peak) - psnr_curve(vel_fn, eval_set, grid, n, seed, peak)


def residual_floor(training_images, mode_set):
    """Mean spectral residual of real training images (nonzero after the tanh)."""
    return float(np.mean(spectral_residual(training_images, mode_set)))


def residual_energy_stats(images, mode_set, floor_mean=None):
    if mode_set is None:
        raise ConfigError("residual statistics need the dataset's mode set")
    e = np.atleast_1d(spectral_residual(images, mode_set))
    out = {"mean": float(np.mean(e)), "median": float(np.median(e))}
    out["baseline_ratio"] = float(out["mean"] / floor_mean) if floor_mean else float("nan")
    return out


def _flat(x):
    x = np.asarray(x, dtype=np.float64)
    return x.reshape(x.shape[0], -1)


def energy_distance(a, b):
    """V-statistic energy distance ``2E|X-Y| - E|X-X'| - E|Y-Y'|`` (always >= 0)."""
    a, b = _flat(a), _flat(b)
    xy = cdist(a, b).mean()
    xx = cdist(a, a).mean()
    yy = cdist(b, b).mean()
    return float(max(2.0 * xy - xx - yy, 0.0))


def moment_distance(generated, reference, max_points=2000):
    """Mean error, relative covariance error (Frobenius) and energy distance."""
    g, r = _flat(generated), _flat(reference)
    if g.shape[0] < 2 or r.shape[0] < 2:
        raise ConfigError("moment distance needs at least two samples per batch")
    if g.shape[1] != r.shape[1]:
        raise ConfigError(f"dimension mismatch {g.shape[1]} vs {r.shape[1]}")
    mean_err = float(np.linalg.norm(g.mean(0) - r.mean(0)))
    cg = np.atleast_2d(np.cov(g, rowvar=False))
    cr = np.atleast_2d(np.cov(r, rowvar=False))
    cov_err = float(np.linalg.norm(cg - cr) / np.linalg.norm(cr))
    ed = energy_distance(g[:max_points], r[:max_points])
    return {"mean_err": mean_err, "cov_err_frobenius": cov_err, "energy_distance": ed}


def rank_correlation(a, b):
    """Spearman correlation, used to log PSNR vs sample-quality agreement across runs."""
    if len(a) < 3:
        return float("nan")
    return float(spearmanr(a, b).statistic)
