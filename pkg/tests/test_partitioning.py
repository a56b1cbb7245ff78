import warnings

import numpy as np
import pytest

from detectorcv import partitioning as P
from detectorcv.errors import DegenerateSplit, DimensionMismatch, EmptyForeground
from detectorcv.image_core import read_gray8


def test_mask_side_rule():
    assert P.retinex_sigma((1000, 800)) == pytest.approx(7.0)
    assert P.retinex_mask_side(P.retinex_sigma((1000, 800))) == 43
    assert P.retinex_mask_side(P.retinex_sigma((100, 60))) == 5
    assert P.retinex_mask_side(1.0) == 7  # 6 sigma exactly even: next odd above
    for s in np.linspace(0.1, 20, 97):
        side = P.retinex_mask_side(s)
        assert side % 2 == 1 and side > 6 * s


def test_four_level_split():
    lum = np.repeat(np.array([10.0, 20.0, 30.0, 40.0]), 25).reshape(10, 10)
    part = P.partition_bright_dark(lum)
    assert ((lum <= 20) == (part.labels == P.DARK)).all()
    assert ((lum >= 30) == (part.labels == P.BRIGHT)).all()


def test_split_respects_background():
    lum = np.arange(16.0).reshape(4, 4)
    bg = np.zeros((4, 4), dtype=bool)
    bg[0] = True
    part = P.partition_bright_dark(lum, bg)
    assert (part.labels[0] == 0).all()
    assert (part.labels == P.DARK).sum() == 6 and (part.labels == P.BRIGHT).sum() == 6


def test_constant_image_warns():
    with pytest.warns(DegenerateSplit):
        part = P.partition_image(np.full((32, 32), 5.0))
    assert (part.labels == P.DARK).all()


def test_checkerboard_is_balanced():
    yy, xx = np.mgrid[0:64, 0:64]
    lum = ((yy // 8 + xx // 8) % 2).astype(float) * 1000 + 1
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        part = P.partition_bright_dark(lum)
    assert (part.labels == P.BRIGHT).sum() == (part.labels == P.DARK).sum() == 2048


def test_random_images_balanced(rng):
    for _ in range(5):
        img = rng.lognormal(0, 2, (96, 80))
        part = P.partition_image(img)
        frac = (part.labels == P.BRIGHT).mean()
        assert abs(frac - 0.5) < 0.01


def test_partition_scale_invariant(rng):
    img = rng.lognormal(0, 1, (64, 64))
    a = P.partition_image(img)
    for k in (0.5, 10.0, 1000.0):
        b = P.partition_image(k * img)
        assert (a.labels != b.labels).mean() < 0.005


def test_bright_side_is_bright():
    img = np.ones((50, 100))
    img[:, 50:] = 100.0
    part = P.partition_image(img)
    assert (part.labels[:, :45] == P.DARK).all() and (part.labels[:, 55:] == P.BRIGHT).all()


def test_luminance_range(rng):
    lum = P.retinex_luminance(rng.lognormal(0, 1, (40, 30)))
    assert lum.min() == 0 and lum.max() == 65535


def test_export_levels(tmp_path, rng):
    bg = np.zeros((32, 32), dtype=bool)
    bg[:4] = True
    part = P.partition_image(rng.lognormal(0, 1, (32, 32)), bg)
    g = P.partition_to_gray8(part)
    assert set(np.unique(g)) == {0, 85, 170}
    path = tmp_path / "labels.pgm"
    P.save_partition(path, part)
    np.testing.assert_array_equal(read_gray8(path), g)


def test_errors():
    with pytest.raises(DimensionMismatch):
        P.partition_bright_dark(np.ones((4, 4)), np.zeros((4, 5), dtype=bool))
    with pytest.raises(EmptyForeground):
        P.partition_bright_dark(np.ones((4, 4)), np.ones((4, 4), dtype=bool))
    with pytest.raises(ValueError):
        P.retinex_luminance(np.ones((4, 4)), alpha=0)
