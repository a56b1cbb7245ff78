"""Coefficient-of-variation mask (CVM).

The CVM replaces every pixel by the coefficient of variation (standard
deviation over mean) of the ``n x n`` window centred on it. Because both
moments scale with intensity, the response does not grow with scene
brightness, which is what makes it usable on linear HDR data.

The Gaussian-weighted variant swaps the standard deviation for

    V = sqrt( (1/N) * sum_i w_i (p_i - mu)^2 )

with ``w_i`` sampled from a 2D Gaussian centred on the window. Two choices
here are interpretations rather than givens:

* the Gaussian weights are rescaled so that ``sum_i w_i == N``; with that
  scaling uniform weights give back the plain standard deviation and the
  weighted/unweighted responses stay on the same scale;
* ``mu`` is the unweighted window mean and the response is ``V / mu``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyPopulation, SizeMismatch
from .filters import check_odd_side
from .image_core import as_gray

MEAN_EPS = 1e-12
CVM_SIDE = 5
CVM_SIGMA = 2.0


@dataclass(frozen=True)
class CvmConfig:
    """CVM window settings. ``sigma_c=None`` disables the Gaussian weight."""

    window_side: int = CVM_SIDE
    sigma_c: float | None = CVM_SIGMA
    mean_eps: float = MEAN_EPS

    def __post_init__(self):
        check_odd_side(self.window_side, "window_side")
        if self.sigma_c is not None and self.sigma_c <= 0:
            raise ValueError("sigma_c must be positive")
        if self.mean_eps < 0:
            raise ValueError("mean_eps must be non-negative")

    @property
    def population(self) -> int:
        return self.window_side * self.window_side

    @property
    def label(self) -> str:
        return "none" if self.sigma_c is None else f"s{self.sigma_c:g}"

    def weights(self) -> np.ndarray:
        if self.sigma_c is None:
            return np.ones((self.window_side, self.window_side))
        return gaussian_weight_window(self.sigma_c, self.window_side)


def cv_of_population(p, mean_eps: float = MEAN_EPS) -> float:
    """Population standard deviation (1/N) divided by the mean.

    Returns 0 when ``|mean| < mean_eps``.
    """
    p = np.asarray(p, dtype=np.float64).ravel()
    if p.size == 0:
        raise EmptyPopulation("cannot take the CV of an empty population")
    mu = p.mean()
    if abs(mu) < mean_eps:
        return 0.0
    return float(np.sqrt(np.mean((p - mu) ** 2)) / mu)


def raw_gaussian_window(sigma_c: float, side: int) -> np.ndarray:
    """``exp(-(x^2 + y^2) / 2 sigma^2) / (2 pi sigma^2)`` on integer offsets."""
    side = check_odd_side(side)
    if sigma_c <= 0:
        raise ValueError("sigma_c must be positive")
    x = np.arange(side, dtype=np.float64) - (side - 1) // 2
    r2 = x[:, None] ** 2 + x[None, :] ** 2
    return np.exp(-r2 / (2.0 * sigma_c * sigma_c)) / (2.0 * np.pi * sigma_c * sigma_c)


def gaussian_weight_window(sigma_c: float, side: int) -> np.ndarray:
    """Gaussian weights rescaled so they sum to ``side**2``."""
    raw = raw_gaussian_window(sigma_c, side)
    return raw * (side * side / raw.sum())


def weighted_variation(p, w, mu: float) -> float:
    p = np.asarray(p, dtype=np.float64).ravel()
    w = np.asarray(w, dtype=np.float64).ravel()
    if p.size != w.size:
        raise SizeMismatch(f"population has {p.size} values but {w.size} weights")
    if p.size == 0:
        raise EmptyPopulation("empty population")
    return float(np.sqrt(np.sum((p - mu) ** 2 * w) / p.size))


def cvm_filter(img: np.ndarray, cfg: CvmConfig = CvmConfig()) -> np.ndarray:
    """Sliding-window (weighted) coefficient of variation, replicate borders.

    Pixels whose window mean is below ``cfg.mean_eps`` get response 0.
    """
    img = as_gray(img)
    side = cfg.window_side
    r = side // 2
    n = side * side
    h, w = img.shape
    weights = cfg.weights()
    padded = np.pad(img, r, mode="edge")
    views = [padded[dy:dy + h, dx:dx + w] for dy in range(side) for dx in range(side)]

    # fixed accumulation order keeps results independent of the data layout
    total = np.zeros_like(img)
    for v in views:
        total += v
    mu = total / n
    acc = np.zeros_like(img)
    for v, wi in zip(views, weights.ravel()):
        d = v - mu
        acc += d * d * wi
    variation = np.sqrt(acc / n)
    # the summed mean carries rounding error; flat windows are exactly zero
    lo, hi = views[0].copy(), views[0].copy()
    for v in views[1:]:
        np.minimum(lo, v, out=lo)
        np.maximum(hi, v, out=hi)
    variation[lo == hi] = 0.0

    out = np.zeros_like(img)
    ok = (mu >= cfg.mean_eps) & (mu > 0)
    out[ok] = variation[ok] / mu[ok]
    return out
