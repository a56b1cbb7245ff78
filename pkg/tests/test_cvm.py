import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from detectorcv.cvm import (
    CvmConfig,
    cv_of_population,
    cvm_filter,
    gaussian_weight_window,
    raw_gaussian_window,
    weighted_variation,
)
from detectorcv.errors import EmptyPopulation, SizeMismatch


def window(img, y, x, side):
    """Clamp-to-edge window as a flat list, row-major."""
    h, w = img.shape
    r = side // 2
    return [img[min(max(y + dy, 0), h - 1), min(max(x + dx, 0), w - 1)]
            for dy in range(-r, r + 1) for dx in range(-r, r + 1)]


def brute_force_cvm(img, cfg):
    """Per-pixel scalar evaluation of V / mu (unweighted mean)."""
    side = cfg.window_side
    w = cfg.weights().ravel().tolist()
    out = np.zeros_like(img)
    for y in range(img.shape[0]):
        for x in range(img.shape[1]):
            p = window(img, y, x, side)
            mu = sum(p) / len(p)
            if mu < cfg.mean_eps:
                continue
            v = math.sqrt(sum((pi - mu) ** 2 * wi for pi, wi in zip(p, w)) / len(p))
            out[y, x] = v / mu
    return out


def test_cv_population_examples():
    assert cv_of_population([5, 5, 5, 5]) == 0.0
    assert cv_of_population([1, 3]) == 0.5
    for k in (1e-3, 1.0, 7.5, 1e6):
        assert cv_of_population([k, 3 * k]) == pytest.approx(0.5, rel=1e-12)


def test_cv_population_guards():
    assert cv_of_population([-1.0, 1.0]) == 0.0
    with pytest.raises(EmptyPopulation):
        cv_of_population([])


def test_weight_window_raw_values():
    for s in (1.0, 1.5, 2.0):
        raw = raw_gaussian_window(s, 5)
        assert raw[2, 2] == pytest.approx(1 / (2 * math.pi * s * s), rel=1e-15)
    raw = raw_gaussian_window(2.0, 5)
    assert raw[4, 4] / raw[2, 2] == pytest.approx(math.exp(-1), rel=1e-14)


@pytest.mark.parametrize("sigma, side", [(1.0, 5), (1.5, 5), (2.0, 5), (0.7, 3), (3.0, 9), (2.0, 1)])
def test_weight_window_normalised_and_shaped(sigma, side):
    w = gaussian_weight_window(sigma, side)
    assert w.sum() == pytest.approx(side * side, abs=1e-9)
    assert (w > 0).all()
    np.testing.assert_allclose(w, w[::-1, :], rtol=1e-15)
    np.testing.assert_allclose(w, w[:, ::-1], rtol=1e-15)
    assert w[side // 2, side // 2] == w.max()


def test_weighted_variation_uniform_weights_is_sigma(rng):
    for _ in range(200):
        p = rng.uniform(0, 10, 25)
        mu = p.mean()
        assert weighted_variation(p, np.ones(25), mu) == pytest.approx(np.std(p), rel=0, abs=1e-12)


def test_weighted_variation_constant_population(rng):
    assert weighted_variation(np.full(25, 3.0), rng.uniform(0, 5, 25), 3.0) == 0.0


def test_weighted_variation_scalar_oracle(rng):
    for _ in range(50):
        p, w = rng.uniform(0, 10, 25), rng.uniform(0, 3, 25)
        mu = sum(p) / 25
        expected = math.sqrt(sum((pi - mu) ** 2 * wi for pi, wi in zip(p, w)) / 25)
        assert weighted_variation(p, w, mu) == pytest.approx(expected, rel=0, abs=1e-12)


def test_weighted_variation_size_mismatch():
    with pytest.raises(SizeMismatch):
        weighted_variation([1, 2, 3], [1, 1], 2.0)


def test_cvm_constant_image_is_zero():
    for cfg in (CvmConfig(), CvmConfig(sigma_c=None)):
        assert (cvm_filter(np.full((10, 10), 4.2), cfg) == 0).all()


def test_cvm_matches_brute_force(rng):
    img = rng.uniform(0, 1, (9, 9))
    for cfg in (CvmConfig(), CvmConfig(sigma_c=None), CvmConfig(sigma_c=1.0), CvmConfig(window_side=3)):
        np.testing.assert_allclose(cvm_filter(img, cfg), brute_force_cvm(img, cfg), rtol=0, atol=1e-12)


def test_cvm_unweighted_reduces_to_population_cv(rng):
    img = rng.lognormal(0, 1, (8, 11))
    out = cvm_filter(img, CvmConfig(sigma_c=None))
    for y in range(img.shape[0]):
        for x in range(img.shape[1]):
            assert out[y, x] == pytest.approx(cv_of_population(window(img, y, x, 5)), rel=0, abs=1e-12)


def test_cvm_zero_mean_windows():
    img = np.zeros((12, 12))
    img[0, 0] = 1.0
    out = cvm_filter(img)
    assert out[11, 11] == 0.0 and out[0, 0] > 0
    assert np.isfinite(cvm_filter(img, CvmConfig(mean_eps=0.0))).all()


@pytest.mark.parametrize("k", [0.5, 3.0, 10.0, 1000.0, 1e-4])
def test_cvm_scale_invariant(rng, k):
    img = rng.uniform(0.01, 5, (20, 17))
    np.testing.assert_allclose(cvm_filter(k * img), cvm_filter(img), rtol=1e-9, atol=0)


def test_cvm_flip_symmetry(rng):
    img = rng.lognormal(0, 2, (14, 19))
    out = cvm_filter(img)
    np.testing.assert_allclose(cvm_filter(img[:, ::-1]), out[:, ::-1], rtol=1e-12)
    np.testing.assert_allclose(cvm_filter(img[::-1, :]), out[::-1, :], rtol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([None, 1.0, 1.5, 2.0]))
def test_cvm_non_negative(seed, sigma):
    img = np.random.default_rng(seed).exponential(1.0, (10, 10))
    assert (cvm_filter(img, CvmConfig(sigma_c=sigma)) >= 0).all()


def test_cvm_config_validation():
    with pytest.raises(ValueError):
        CvmConfig(window_side=4)
    with pytest.raises(ValueError):
        CvmConfig(sigma_c=0.0)
    assert CvmConfig().population == 25
