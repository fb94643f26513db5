"""Synthetic images with a fixed set of active Fourier modes.

Each image has an ``N x N`` spectrum that is zero except on a fixed mode set
``K`` (chosen representatives plus their conjugate partners). Only the
coefficients vary between samples, so pre-nonlinearity images span a linear
subspace whose real dimension is :attr:`ModeSet.real_dof`.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..errors import ConfigError
from .fft import fft2, ifft2


@dataclass(frozen=True)
class FourierManifoldSpec:
    N: int = 32
    m: int = 4
    selection: str = "lowfreq"
    selection_seed: int = 0
    exclude_dc: bool = True
    coeff_law: str = "gaussian"
    scale: float = 1.0
    alpha: float = 2.0
    dataset_seed: int = 0

    def __post_init__(self):
        if self.N < 2:
            raise ConfigError("grid size must be >= 2")
        if self.selection not in ("lowfreq", "seeded-random"):
            raise ConfigError(f"unknown mode selection {self.selection!r}")
        if self.coeff_law not in ("gaussian", "uniform"):
            raise ConfigError(f"unknown coefficient law {self.coeff_law!r}")
        if not self.scale > 0 or not self.alpha > 0:
            raise ConfigError("scale and alpha must be positive")
        if self.m < 1:
            raise ConfigError("need at least one active mode")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def periodic_radius(k, l, n):
    return min(k, n - k) ** 2 + min(l, n - l) ** 2


def conjugate(k, l, n):
    return (-k) % n, (-l) % n


def is_self_conjugate(k, l, n):
    return conjugate(k, l, n) == (k, l)


def mode_representatives(n, exclude_dc=False):
    """One index per conjugate pair (the lexicographically smaller one)."""
    reps = []
    for k in range(n):
        for l in range(n):
            if exclude_dc and (k, l) == (0, 0):
                continue
            if (k, l) <= conjugate(k, l, n):
                reps.append((k, l))
    return reps


@dataclass(frozen=True)
class ModeSet:
    N: int
    representatives: tuple

    @property
    def support(self):
        out = set()
        for k, l in self.representatives:
            out.add((k, l))
            out.add(conjugate(k, l, self.N))
        return sorted(out)

    @property
    def mask(self):
        m = np.zeros((self.N, self.N), dtype=bool)
        for k, l in self.support:
            m[k, l] = True
        return m

    @property
    def self_conjugate(self):
        return [is_self_conjugate(k, l, self.N) for k, l in self.representatives]

    @property
    def real_dof(self):
        """Real degrees of freedom: 1 per self-conjugate mode, 2 otherwise."""
        return sum(1 if s else 2 for s in self.self_conjugate)

    def to_dict(self):
        return {"N": self.N, "representatives": [list(r) for r in self.representatives]}

    @classmethod
    def from_dict(cls, d):
        return cls(N=int(d["N"]), representatives=tuple(tuple(int(v) for v in r) for r in d["representatives"]))


def select_modes(spec):
    reps = mode_representatives(spec.N, exclude_dc=spec.exclude_dc)
    if spec.m > len(reps):
        raise ConfigError(f"m={spec.m} exceeds the {len(reps)} admissible modes on a {spec.N}x{spec.N} grid")
    if spec.selection == "lowfreq":
        chosen = sorted(reps, key=lambda kl: (periodic_radius(kl[0], kl[1], spec.N), kl))[: spec.m]
    else:
        rng = np.random.default_rng(spec.selection_seed)
        idx = rng.choice(len(reps), size=spec.m, replace=False)
        chosen = sorted(reps[i] for i in idx)
    return ModeSet(N=spec.N, representatives=tuple(chosen))


def draw_coefficients(spec, mode_set, n, rng):
    """Complex coefficients, shape ``(n, m)``; real at self-conjugate modes.

    Gaussian: real and imaginary parts ~ N(0, scale^2/2) so E|a|^2 = scale^2
    (real modes: N(0, scale^2)). Uniform: parts ~ U(-scale, scale).
    """
    m = len(mode_set.representatives)
    selfc = np.array(mode_set.self_conjugate)
    if spec.coeff_law == "gaussian":
        re = rng.standard_normal((n, m))
        im = rng.standard_normal((n, m))
        re = np.where(selfc, re, re / np.sqrt(2.0))
        im = np.where(selfc, 0.0, im / np.sqrt(2.0))
    else:
        re = rng.uniform(-1.0, 1.0, (n, m))
        im = np.where(selfc, 0.0, rng.uniform(-1.0, 1.0, (n, m)))
    return spec.scale * (re + 1j * im)


def spectrum_from_coefficients(coeffs, mode_set):
    coeffs = np.atleast_2d(coeffs)
    n = mode_set.N
    spec = np.zeros((coeffs.shape[0], n, n), dtype=np.complex128)
    for j, (k, l) in enumerate(mode_set.representatives):
        ck, cl = conjugate(k, l, n)
        spec[:, k, l] = coeffs[:, j]
        if (ck, cl) != (k, l):
            spec[:, ck, cl] = np.conj(coeffs[:, j])
        else:
            spec[:, k, l] = coeffs[:, j].real
    return spec


def sample_fourier_images(spec, mode_set, n, rng, apply_tanh=True, return_complex=False):
    """``n`` images of shape ``(N, N)``; ``tanh(alpha * Re(ifft2(spectrum)))`` by default."""
    coeffs = draw_coefficients(spec, mode_set, n, rng)
    z = ifft2(spectrum_from_coefficients(coeffs, mode_set))
    if return_complex:
        return z
    x = z.real
    if apply_tanh:
        x = np.tanh(spec.alpha * x)
    return x


def sample_fourier_image(spec, mode_set, rng):
    return sample_fourier_images(spec, mode_set, 1, rng)[0]


def spectral_residual(image, mode_set):
    """Energy of the orthonormal spectrum outside the mode support (per image)."""
    xhat = fft2(image)
    off = ~mode_set.mask
    e = np.abs(xhat) ** 2
    out = np.sum(e * off, axis=(-2, -1))
    return out if np.ndim(out) else float(out)


def make_fourier_dataset(spec, n, rng=None):
    """Training images from ``spec.dataset_seed`` (or ``rng``) plus the mode set."""
    modes = select_modes(spec)
    rng = np.random.default_rng(spec.dataset_seed) if rng is None else rng
    return sample_fourier_images(spec, modes, n, rng), modes
