from .fft import fft2, ifft2
from .fourier import (
    FourierManifoldSpec,
    ModeSet,
    make_fourier_dataset,
    sample_fourier_image,
    sample_fourier_images,
    select_modes,
    spectral_residual,
)
from .io import read_dataset, write_dataset
from .synthetic import sample_gaussian_data, sample_mixture2d

__all__ = [
    "fft2",
    "ifft2",
    "FourierManifoldSpec",
    "ModeSet",
    "select_modes",
    "sample_fourier_image",
    "sample_fourier_images",
    "make_fourier_dataset",
    "spectral_residual",
    "sample_gaussian_data",
    "sample_mixture2d",
    "read_dataset",
    "write_dataset",
]
