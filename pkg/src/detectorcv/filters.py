"""Smoothing filters and intensity transforms.

Every filter here pads by edge replication ("clamp to edge"), so output
images always have the input's shape.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import EvenSide
from .image_core import as_gray

LINEAR_C = 25.0
LOG_C = 150.0
HISTEQ_BINS = 65536
LOG_GUARD = 1e-6

# an even 10x10 window has no centre pixel; 11 is the nearest centred size
BILATERAL_DIAMETER = 11

TRANSFORM_KINDS = ("linear", "log", "histeq")
FILTER_KINDS = ("gaussian", "bilateral")


def check_odd_side(side, name: str = "side") -> int:
    if int(side) != side or side < 1 or side % 2 == 0:
        raise EvenSide(f"{name} must be an odd integer >= 1, got {side}")
    return int(side)


def gaussian_sigma_from_side(side: int) -> float:
    """Gaussian sigma implied by a square mask side (OpenCV's rule).

    >>> gaussian_sigma_from_side(9)
    1.7
    """
    side = check_odd_side(side)
    return 0.3 * ((side - 1) * 0.5 - 1) + 0.8


def gaussian_kernel1d(sigma: float, side: int) -> np.ndarray:
    """Sampled Gaussian of length ``side`` normalised to sum 1."""
    side = check_odd_side(side)
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    x = np.arange(side, dtype=np.float64) - (side - 1) / 2
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def gaussian_kernel2d(sigma: float, side: int) -> np.ndarray:
    k = gaussian_kernel1d(sigma, side)
    return np.outer(k, k)


def convolve2d(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """2D convolution with replicate borders; output has the input's shape."""
    img = as_gray(img)
    kernel = np.asarray(kernel, dtype=np.float64)
    if kernel.ndim != 2:
        raise ValueError("kernel must be 2D")
    for n in kernel.shape:
        check_odd_side(n, "kernel side")
    return ndimage.convolve(img, kernel, mode="nearest")


def separable_filter(img: np.ndarray, k: np.ndarray) -> np.ndarray:
    """Apply the same symmetric 1D kernel along rows then columns."""
    out = ndimage.correlate1d(as_gray(img), k, axis=1, mode="nearest")
    return ndimage.correlate1d(out, k, axis=0, mode="nearest")


def gaussian_blur(img: np.ndarray, side: int) -> np.ndarray:
    """Gaussian blur whose sigma is derived from the mask side."""
    side = check_odd_side(side)
    return separable_filter(img, gaussian_kernel1d(gaussian_sigma_from_side(side), side))


def gaussian_blur_sigma(img: np.ndarray, sigma: float, side: int | None = None) -> np.ndarray:
    """Gaussian blur with explicit sigma; default side covers +-3 sigma."""
    if side is None:
        side = 2 * int(np.ceil(3.0 * sigma)) + 1
    return separable_filter(img, gaussian_kernel1d(sigma, side))


def bilateral_filter(img: np.ndarray, diameter: int = BILATERAL_DIAMETER,
                     sigma_space: float = 150.0, sigma_color: float = 150.0) -> np.ndarray:
    """Bilateral filter over a square ``diameter x diameter`` window.

    Each output pixel is the normalised sum of window pixels weighted by
    ``exp(-d^2 / 2 sigma_space^2) * exp(-(I_q - I_p)^2 / 2 sigma_color^2)``,
    where ``d`` is the pixel distance to the window centre.
    """
    img = as_gray(img)
    diameter = check_odd_side(diameter, "diameter")
    if sigma_space <= 0 or sigma_color <= 0:
        raise ValueError("bilateral sigmas must be positive")
    r = diameter // 2
    h, w = img.shape
    padded = np.pad(img, r, mode="edge")
    num = np.zeros_like(img)
    den = np.zeros_like(img)
    inv_space = -0.5 / (sigma_space * sigma_space)
    inv_color = -0.5 / (sigma_color * sigma_color)
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            q = padded[r + dy:r + dy + h, r + dx:r + dx + w]
            diff = q - img
            wgt = np.exp((dy * dy + dx * dx) * inv_space + diff * diff * inv_color)
            num += wgt * q
            den += wgt
    return num / den


def histogram_equalize(img: np.ndarray, bins: int = HISTEQ_BINS) -> np.ndarray:
    """Equalise over ``bins`` equal-width bins between the image min and max.

    Each pixel maps to the cumulative fraction of pixels in its bin or
    below, so the output lies in (0, 1].
    """
    img = as_gray(img)
    if bins < 2:
        raise ValueError("bins must be >= 2")
    lo, hi = img.min(), img.max()
    if hi == lo:
        idx = np.zeros(img.shape, dtype=np.int64)
    else:
        idx = np.floor((img - lo) / (hi - lo) * bins).astype(np.int64)
        np.clip(idx, 0, bins - 1, out=idx)
    cdf = np.cumsum(np.bincount(idx.ravel(), minlength=bins)) / idx.size
    return cdf[idx]


@dataclass(frozen=True)
class TransformSpec:
    kind: str = "histeq"
    c: float | None = None
    bins: int = HISTEQ_BINS

    def __post_init__(self):
        if self.kind not in TRANSFORM_KINDS:
            raise ValueError(f"transform must be one of {TRANSFORM_KINDS}, got {self.kind!r}")
        if self.c is None:
            object.__setattr__(self, "c", LOG_C if self.kind == "log" else LINEAR_C)
        if self.c <= 0:
            raise ValueError("transform constant must be positive")
        if self.bins < 2:
            raise ValueError("bins must be >= 2")

    @property
    def label(self) -> str:
        return self.kind


def apply_transform(img: np.ndarray, t: TransformSpec) -> np.ndarray:
    img = as_gray(img)
    if t.kind == "linear":
        return t.c * img
    if t.kind == "log":
        return t.c * np.log(img + LOG_GUARD)
    return histogram_equalize(img, t.bins)


@dataclass(frozen=True)
class FilterSpec:
    """Smoothing stage: ``gaussian`` with a mask side, or ``bilateral``.

    For the bilateral filter ``sigma`` is used as both sigma space and
    sigma colour.
    """

    kind: str = "gaussian"
    side: int = 9
    diameter: int = BILATERAL_DIAMETER
    sigma: float = 150.0

    def __post_init__(self):
        if self.kind not in FILTER_KINDS:
            raise ValueError(f"filter must be one of {FILTER_KINDS}, got {self.kind!r}")
        if self.kind == "gaussian":
            check_odd_side(self.side)
        else:
            check_odd_side(self.diameter, "diameter")
            if self.sigma <= 0:
                raise ValueError("bilateral sigma must be positive")

    @classmethod
    def parse(cls, text: str) -> FilterSpec:
        """Parse ``gaussian:<side>`` or ``bilateral:<sigma>``."""
        kind, _, arg = text.partition(":")
        kind = kind.strip().lower()
        if kind not in FILTER_KINDS:
            raise ValueError(f"unknown filter {text!r}")
        try:
            value = (int if kind == "gaussian" else float)(arg) if arg else None
        except ValueError:
            raise ValueError(f"bad {kind} parameter in {text!r}") from None
        if kind == "gaussian":
            return cls("gaussian", side=9 if value is None else value)
        return cls("bilateral", sigma=150.0 if value is None else value)

    @property
    def label(self) -> str:
        if self.kind == "gaussian":
            return f"gaussian:{self.side}"
        return f"bilateral:{self.sigma:g}"


def apply_filter(img: np.ndarray, f: FilterSpec) -> np.ndarray:
    if f.kind == "gaussian":
        return gaussian_blur(img, f.side)
    return bilateral_filter(img, f.diameter, f.sigma, f.sigma)
