"""Split an image into dark and bright halves for the uniformity metric.

Illumination is estimated Retinex-style (``I = R * L``) by blurring the
image with a wide Gaussian, ``L = I * G_r``. The luminance map is stored at
16-bit precision and the brighter half of the non-background pixels forms
the "bright" area.
"""

from __future__ import annotations

import math
import warnings

import numpy as np

from .errors import DegenerateSplit, DimensionMismatch, EmptyForeground
from .filters import gaussian_kernel1d, separable_filter
from .image_core import PartitionMap, as_gray, normalize_u16, write_gray8

RETINEX_ALPHA = 0.007
HIST_BINS = 65536
DARK, BRIGHT = 1, 2
EXPORT_LEVELS = {0: 0, DARK: 85, BRIGHT: 170}


def retinex_sigma(shape: tuple[int, int], alpha: float = RETINEX_ALPHA) -> float:
    return alpha * max(shape)


def retinex_mask_side(sigma: float) -> int:
    """Smallest odd integer strictly greater than ``6 * sigma``."""
    side = math.floor(6.0 * sigma) + 1
    return side if side % 2 else side + 1


def retinex_luminance(img: np.ndarray, alpha: float = RETINEX_ALPHA) -> np.ndarray:
    """Blurred illumination estimate, min-max normalised to 0..65535."""
    img = as_gray(img)
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    sigma = retinex_sigma(img.shape, alpha)
    side = retinex_mask_side(sigma)
    return normalize_u16(separable_filter(img, gaussian_kernel1d(sigma, side)))


def partition_bright_dark(lum: np.ndarray, background: np.ndarray | None = None) -> PartitionMap:
    """Label the brighter half of the foreground Area(2), the rest Area(1).

    ``background`` is a boolean mask, True on pixels to leave out. The
    threshold is the smallest 16-bit level whose cumulative foreground
    count reaches half the foreground; pixels at that level go to dark.
    """
    lum = as_gray(lum)
    if background is None:
        background = np.zeros(lum.shape, dtype=bool)
    background = np.asarray(background, dtype=bool)
    if background.shape != lum.shape:
        raise DimensionMismatch(f"mask {background.shape} does not match image {lum.shape}")
    fg = ~background
    n_fg = int(fg.sum())
    if n_fg < 2:
        raise EmptyForeground(f"need at least 2 foreground pixels, got {n_fg}")

    levels = np.clip(np.floor(lum), 0, HIST_BINS - 1).astype(np.int64)
    cum = np.cumsum(np.bincount(levels[fg], minlength=HIST_BINS))
    threshold = int(np.searchsorted(cum, n_fg / 2.0, side="left"))

    labels = np.where(levels > threshold, BRIGHT, DARK)
    labels[background] = 0
    n_bright = int((labels == BRIGHT).sum())
    if n_bright == 0 or n_bright == n_fg:
        warnings.warn("luminance split left one area empty", DegenerateSplit, stacklevel=2)
    return PartitionMap(labels, 2)


def partition_image(img: np.ndarray, background: np.ndarray | None = None,
                    alpha: float = RETINEX_ALPHA) -> PartitionMap:
    return partition_bright_dark(retinex_luminance(img, alpha), background)


def partition_to_gray8(part: PartitionMap) -> np.ndarray:
    """0 background, 85 dark, 170 bright."""
    if part.n_areas > 2:
        raise ValueError("export convention covers dark/bright partitions only")
    lut = np.array([EXPORT_LEVELS[k] for k in range(3)], dtype=np.uint8)
    return lut[part.labels]


def save_partition(path, part: PartitionMap) -> None:
    write_gray8(path, partition_to_gray8(part))
