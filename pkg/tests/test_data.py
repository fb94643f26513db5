import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flowden.data import (FourierManifoldSpec, ModeSet, fft2, ifft2, make_fourier_dataset, read_dataset,
                          sample_fourier_image, sample_fourier_images, sample_gaussian_data, sample_mixture2d,
                          select_modes, spectral_residual, write_dataset)
from flowden.data.fourier import (conjugate, is_self_conjugate, mode_representatives, periodic_radius,
                                  spectrum_from_coefficients)
from flowden.errors import ConfigError, FlowdenError, ShapeError
from flowden.oracle import GaussianDataSpec

rng = np.random.default_rng(0)


# -- FFT -----------------------------------------------------------------------

def test_constant_image_has_only_dc():
    s = fft2(np.full((8, 8), 0.7))
    assert s[0, 0] == pytest.approx(0.7 * 8)
    s[0, 0] = 0
    assert np.max(np.abs(s)) < 1e-12


@pytest.mark.parametrize("n", [4, 6, 16, 32])
def test_round_trip_and_parseval(n):
    x = rng.standard_normal((3, n, n))
    s = fft2(x)
    assert np.max(np.abs(ifft2(s) - x)) <= 1e-10
    assert np.sum(np.abs(s) ** 2) == pytest.approx(np.sum(x ** 2), abs=1e-10 * np.sum(x ** 2))
    np.testing.assert_allclose(s, np.fft.fft2(x, norm="ortho"), atol=1e-10)


def test_fft_rejects_non_square():
    with pytest.raises(ShapeError):
        fft2(np.zeros((4, 8)))


# -- modes -----------------------------------------------------------------------

def test_lowfreq_minimal_radius_with_dc():
    ms = select_modes(FourierManifoldSpec(N=4, m=1, exclude_dc=False))
    assert ms.representatives == ((0, 0),)


def test_lowfreq_tie_break_on_32_grid():
    assert periodic_radius(1, 0, 32) == 1 and periodic_radius(0, 31, 32) == 1
    ms = select_modes(FourierManifoldSpec(N=32, m=2))
    assert ms.representatives == ((0, 1), (1, 0))
    ms4 = select_modes(FourierManifoldSpec(N=32, m=4))
    # radius-2 diagonals follow; (1, 31) is the representative of (31, 1)
    assert ms4.representatives == ((0, 1), (1, 0), (1, 1), (1, 31))


def test_lowfreq_matches_brute_force_enumeration():
    n, m = 32, 16
    reps = {}
    for k in range(n):
        for l in range(n):
            if (k, l) == (0, 0):
                continue
            key = min((k, l), ((-k) % n, (-l) % n))
            reps[key] = periodic_radius(*key, n)
    expect = sorted(reps, key=lambda kl: (reps[kl], kl))[:m]
    assert list(select_modes(FourierManifoldSpec(N=n, m=m)).representatives) == expect


def test_seeded_random_is_deterministic_and_excludes_dc():
    spec = FourierManifoldSpec(N=16, m=10, selection="seeded-random", selection_seed=7)
    a, b = select_modes(spec), select_modes(spec)
    assert a == b
    assert (0, 0) not in a.representatives


def test_too_many_modes_rejected():
    n_reps = len(mode_representatives(4, exclude_dc=True))
    with pytest.raises(ConfigError):
        select_modes(FourierManifoldSpec(N=4, m=n_reps + 1))


def test_support_closed_under_conjugation():
    ms = select_modes(FourierManifoldSpec(N=32, m=16, selection="seeded-random", selection_seed=3))
    sup = set(ms.support)
    assert all(conjugate(k, l, 32) in sup for k, l in sup)


def test_representatives_cover_each_pair_once():
    n = 8
    reps = mode_representatives(n)
    covered = [kl for k, l in reps for kl in {(k, l), conjugate(k, l, n)}]
    assert sorted(covered) == [(k, l) for k in range(n) for l in range(n)]
    assert sum(is_self_conjugate(k, l, n) for k, l in reps) == 4


def test_real_dof_accounting():
    ms = ModeSet(N=32, representatives=((0, 16), (1, 2), (16, 16)))
    assert ms.self_conjugate == [True, False, True]
    assert ms.real_dof == 4


def test_modeset_dict_round_trip():
    ms = select_modes(FourierManifoldSpec(m=5))
    assert ModeSet.from_dict(ms.to_dict()) == ms


# -- image sampling ------------------------------------------------------------

def test_zero_coefficient_gives_zero_image():
    ms = ModeSet(N=8, representatives=((0, 4),))
    spec_ = spectrum_from_coefficients(np.zeros((1, 1)), ms)
    img = np.tanh(2.0 * ifft2(spec_).real)
    np.testing.assert_array_equal(img, 0.0)


def test_images_in_open_unit_interval_and_real_before_tanh():
    spec = FourierManifoldSpec(m=8, scale=4.0)
    ms = select_modes(spec)
    imgs = sample_fourier_images(spec, ms, 20, np.random.default_rng(1))
    assert np.all(np.abs(imgs) < 1)
    z = sample_fourier_images(spec, ms, 20, np.random.default_rng(1), return_complex=True)
    assert np.max(np.abs(z.imag)) <= 1e-12
    np.testing.assert_allclose(np.tanh(spec.alpha * z.real), imgs)


def test_self_conjugate_modes_get_real_coefficients():
    ms = ModeSet(N=8, representatives=((0, 4), (4, 4), (1, 2)))
    spec = FourierManifoldSpec(N=8, m=3)
    z = sample_fourier_images(spec, ms, 5, np.random.default_rng(2), return_complex=True)
    assert np.max(np.abs(z.imag)) <= 1e-12


@pytest.mark.parametrize("m", [4, 8, 16])
def test_pre_tanh_rank_equals_real_dof(m):
    spec = FourierManifoldSpec(N=32, m=m)
    ms = select_modes(spec)
    n = 4 * ms.real_dof + 10
    x = sample_fourier_images(spec, ms, n, np.random.default_rng(m), apply_tanh=False)
    assert np.linalg.matrix_rank(x.reshape(n, -1)) == ms.real_dof


def test_rank_with_self_conjugate_modes():
    spec = FourierManifoldSpec(N=32, m=3)
    ms = ModeSet(N=32, representatives=((0, 16), (16, 0), (2, 3)))
    x = sample_fourier_images(spec, ms, 40, np.random.default_rng(0), apply_tanh=False)
    assert np.linalg.matrix_rank(x.reshape(40, -1)) == ms.real_dof == 4


def test_coefficient_law_moments():
    spec = FourierManifoldSpec(N=8, m=1, scale=2.0)
    ms = ModeSet(N=8, representatives=((1, 2),))
    from flowden.data.fourier import draw_coefficients
    a = draw_coefficients(spec, ms, 200_000, np.random.default_rng(0))[:, 0]
    assert np.mean(np.abs(a) ** 2) == pytest.approx(4.0, rel=0.02)
    assert np.var(a.real) == pytest.approx(np.var(a.imag), rel=0.02)


def test_uniform_law_and_single_image():
    spec = FourierManifoldSpec(N=8, m=2, coeff_law="uniform")
    ms = select_modes(spec)
    img = sample_fourier_image(spec, ms, np.random.default_rng(0))
    assert img.shape == (8, 8) and np.all(np.abs(img) < 1)


def test_dataset_seed_determinism():
    spec = FourierManifoldSpec(m=4, dataset_seed=11)
    a, ma = make_fourier_dataset(spec, 5)
    b, mb = make_fourier_dataset(spec, 5)
    assert np.array_equal(a, b) and ma == mb


def test_spec_validation():
    with pytest.raises(ConfigError):
        FourierManifoldSpec(selection="highfreq")
    with pytest.raises(ConfigError):
        FourierManifoldSpec(coeff_law="cauchy")
    with pytest.raises(ConfigError):
        FourierManifoldSpec(m=0)


# -- spectral residual ---------------------------------------------------------

def test_residual_zero_on_support():
    spec = FourierManifoldSpec(m=8)
    ms = select_modes(spec)
    x = sample_fourier_images(spec, ms, 10, np.random.default_rng(0), apply_tanh=False)
    assert np.max(spectral_residual(x, ms)) <= 1e-20


def test_residual_of_unit_off_support_cosine():
    ms = select_modes(FourierManifoldSpec(m=4))
    n = 32
    i = np.arange(n)
    img = np.cos(2 * np.pi * 5 * i / n)[:, None] * np.ones(n)[None, :]
    img /= np.linalg.norm(img)
    assert spectral_residual(img, ms) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_residual_invariant_to_on_support_additions(seed):
    r = np.random.default_rng(seed)
    spec = FourierManifoldSpec(m=4)
    ms = select_modes(spec)
    img = r.standard_normal((32, 32))
    on = sample_fourier_images(spec, ms, 1, r, apply_tanh=False)[0] * 10
    assert spectral_residual(img + on, ms) == pytest.approx(spectral_residual(img, ms), rel=1e-10)


def test_post_tanh_floor_is_small_positive():
    spec = FourierManifoldSpec(m=4)
    imgs, ms = make_fourier_dataset(spec, 50)
    e = spectral_residual(imgs, ms)
    assert np.all(e > 0) and np.mean(e) < 0.05 * np.mean(np.sum(imgs ** 2, axis=(1, 2)))


# -- toy data ------------------------------------------------------------------

def test_gaussian_data_moments():
    x = sample_gaussian_data(GaussianDataSpec(tau=2.0, d=1), 100_000, np.random.default_rng(0))
    assert x.var() == pytest.approx(4.0, abs=0.1)
    assert abs(x.mean()) <= 3 * 2.0 / np.sqrt(1e5)


def test_mixture_samples():
    x, lab = sample_mixture2d([[3.0, -1.0]], [1.0], 0.5, 1000, np.random.default_rng(0))
    assert np.all(lab == 0) and np.allclose(x.mean(0), [3.0, -1.0], atol=0.1)
    x, lab = sample_mixture2d([[-2.0, 0.0], [2.0, 0.0]], [0.5, 0.5], 0.5, 20_000, np.random.default_rng(1))
    assert np.allclose(x.mean(0), 0.0, atol=0.06)
    x, lab = sample_mixture2d([[-2.0, 0.0], [2.0, 0.0], [0.0, 3.0]], [0.2, 0.3, 0.5], 0.5, 20_000,
                              np.random.default_rng(2))
    np.testing.assert_allclose(np.bincount(lab) / len(lab), [0.2, 0.3, 0.5], atol=0.02)


@pytest.mark.parametrize("weights", [[0.5, 0.6], [1.0], [-0.5, 1.5]])
def test_mixture_rejects_invalid_weights(weights):
    with pytest.raises(ConfigError):
        sample_mixture2d([[0.0, 0.0], [1.0, 1.0]], weights, 0.5, 10, np.random.default_rng(0))


# -- dataset files -------------------------------------------------------------

def test_dataset_file_round_trip(tmp_path):
    spec = FourierManifoldSpec(m=4)
    imgs, ms = make_fourier_dataset(spec, 6)
    path = tmp_path / "d.fds"
    write_dataset(path, imgs, {"fourier": spec.to_dict(), "mode_set": ms.to_dict()})
    data, header = read_dataset(path)
    assert np.array_equal(data, imgs)
    assert header["shape"] == [6, 32, 32]
    assert ModeSet.from_dict(header["mode_set"]) == ms
    raw = path.read_bytes()
    assert raw[:4] == b"FDS1"
    path.write_bytes(raw[:-8])
    with pytest.raises(FlowdenError):
        read_dataset(path)
