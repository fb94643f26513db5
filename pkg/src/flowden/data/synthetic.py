import numpy as np

from ..errors import ConfigError
from ..oracle import GaussianDataSpec


def sample_gaussian_data(spec: GaussianDataSpec, n, rng):
    """``n`` i.i.d. draws from N(0, tau^2 I_d)."""
    return spec.tau * rng.standard_normal((int(n), int(spec.d)))


def sample_mixture2d(centers, weights, std, n, rng):
    """Isotropic Gaussian mixture draws; returns ``(samples, component labels)``."""
    centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (centers.shape[0],) or np.any(weights < 0) or not np.isclose(weights.sum(), 1.0):
        raise ConfigError("mixture weights must be nonnegative, one per center, summing to 1")
    if not std > 0:
        raise ConfigError("mixture std must be positive")
    labels = rng.choice(len(weights), size=int(n), p=weights)
    x = centers[labels] + std * rng.standard_normal((int(n), centers.shape[1]))
    return x, labels
