"""Feature point detectors.

DetectorCV runs four stages: weighted CVM, an intensity transform, a
smoothing filter and non-maximum suppression with top-M selection. The
Harris and DoG baselines are here too, each with an HDR variant that
inserts a CVM stage (after the first blur for Harris, on every octave's
resized image for DoG).

All detectors return feature points ordered by (response desc, row asc,
col asc).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import ndimage

from .cvm import CvmConfig, cvm_filter
from .errors import ImageTooSmall
from .filters import (
    FilterSpec,
    TransformSpec,
    apply_filter,
    apply_transform,
    check_odd_side,
    gaussian_blur,
    gaussian_blur_sigma,
)
from .image_core import as_gray

MIN_OCTAVE_SIDE = 16


@dataclass(frozen=True)
class FeaturePoint:
    row: int
    col: int
    response: float
    scale: float = 1.0


@dataclass(frozen=True)
class SelectionConfig:
    max_points: int = 500
    nms_side: int = 21

    def __post_init__(self):
        if self.max_points < 1:
            raise ValueError("max_points must be >= 1")
        check_odd_side(self.nms_side, "nms_side")


@dataclass(frozen=True)
class HarrisConfig:
    gauss_side: int = 5
    k: float = 0.04
    rel_threshold: float = 0.01

    def __post_init__(self):
        check_odd_side(self.gauss_side, "gauss_side")
        if not 0 < self.k < 0.25:
            raise ValueError("Harris k must lie in (0, 0.25)")
        if not 0 < self.rel_threshold < 1:
            raise ValueError("rel_threshold must lie in (0, 1)")


@dataclass(frozen=True)
class DogConfig:
    octaves: int = 4
    scales_per_octave: int = 3
    sigma0: float = 1.6
    rel_threshold: float = 0.01

    def __post_init__(self):
        if self.octaves < 1:
            raise ValueError("octaves must be >= 1")
        if self.scales_per_octave < 3:
            raise ValueError("scales_per_octave must be >= 3")
        if self.sigma0 <= 0:
            raise ValueError("sigma0 must be positive")
        if not 0 <= self.rel_threshold < 1:
            raise ValueError("rel_threshold must lie in [0, 1)")


@dataclass(frozen=True)
class DetectorConfig:
    """Full DetectorCV parameterisation; defaults are the selected winner."""

    cvm: CvmConfig = field(default_factory=CvmConfig)
    transform: TransformSpec = field(default_factory=TransformSpec)
    filter: FilterSpec = field(default_factory=FilterSpec)
    selection: SelectionConfig = field(default_factory=SelectionConfig)


# ---------------------------------------------------------------------------
# selection

def neighbour_max(response: np.ndarray, side: int) -> np.ndarray:
    """Max over the centred ``side x side`` window excluding the centre.

    The window is clipped to the image. Computed as the max of four
    rectangles (band above, band below, left and right of the centre row),
    each reduced separably.
    """
    a = np.asarray(response, dtype=np.float64)
    r = check_odd_side(side, "nms_side") // 2
    h, w = a.shape
    if r == 0:
        return np.full_like(a, -np.inf)
    p = np.pad(a, r, constant_values=-np.inf)
    row_full = sliding_window_view(p, 2 * r + 1, axis=1).max(axis=-1)
    bands = sliding_window_view(row_full, r, axis=0).max(axis=-1)
    centre = sliding_window_view(p[r:r + h], r, axis=1).max(axis=-1)
    out = np.maximum(bands[:h], bands[r + 1:r + 1 + h])
    np.maximum(out, centre[:, :w], out=out)
    np.maximum(out, centre[:, r + 1:r + 1 + w], out=out)
    return out


def sort_points(rows, cols, resp) -> np.ndarray:
    """Indices ordering points by (response desc, row asc, col asc)."""
    return np.lexsort((np.asarray(cols), np.asarray(rows), -np.asarray(resp)))


def select_feature_points(response: np.ndarray, sel: SelectionConfig = SelectionConfig(),
                          scale: np.ndarray | float = 1.0) -> list[FeaturePoint]:
    """Strict local maxima of ``response`` in an ``nms_side`` window, top M.

    ``scale`` may be a per-pixel array (used by DoG) or a constant.
    """
    resp = np.asarray(response, dtype=np.float64)
    if not np.isfinite(resp).all():
        raise ValueError("response image must be finite")
    peaks = resp > neighbour_max(resp, sel.nms_side)
    rows, cols = np.nonzero(peaks)
    vals = resp[rows, cols]
    order = sort_points(rows, cols, vals)[:sel.max_points]
    scales = np.broadcast_to(np.asarray(scale, dtype=np.float64), resp.shape)
    return [FeaturePoint(int(rows[i]), int(cols[i]), float(vals[i]),
                         float(scales[rows[i], cols[i]])) for i in order]


# ---------------------------------------------------------------------------
# DetectorCV

def detect_cv_stages(img: np.ndarray, cfg: DetectorConfig = DetectorConfig()) -> dict[str, np.ndarray]:
    """Intermediate images of the DetectorCV pipeline, keyed by stage."""
    cv = cvm_filter(img, cfg.cvm)
    transformed = apply_transform(cv, cfg.transform)
    return {"cvm": cv, "transform": transformed, "filter": apply_filter(transformed, cfg.filter)}


def detect_cv(img: np.ndarray, cfg: DetectorConfig = DetectorConfig()) -> list[FeaturePoint]:
    return select_feature_points(detect_cv_stages(img, cfg)["filter"], cfg.selection)


# ---------------------------------------------------------------------------
# Harris

def harris_response(img: np.ndarray, cfg: HarrisConfig = HarrisConfig(),
                    cvm: CvmConfig | None = None) -> np.ndarray:
    """Cornerness ``det(M) - k trace(M)^2`` of the smoothed structure tensor.

    With ``cvm`` set, the CVM runs between the initial blur and the Sobel step.
    """
    smooth = gaussian_blur(as_gray(img), cfg.gauss_side)
    if cvm is not None:
        smooth = cvm_filter(smooth, cvm)
    dx = ndimage.sobel(smooth, axis=1, mode="nearest")
    dy = ndimage.sobel(smooth, axis=0, mode="nearest")
    sxx = gaussian_blur(dx * dx, cfg.gauss_side)
    syy = gaussian_blur(dy * dy, cfg.gauss_side)
    sxy = gaussian_blur(dx * dy, cfg.gauss_side)
    trace = sxx + syy
    return sxx * syy - sxy * sxy - cfg.k * trace * trace


def _threshold_and_select(resp: np.ndarray, rel: float, sel: SelectionConfig,
                          scale: np.ndarray | float = 1.0) -> list[FeaturePoint]:
    top = resp.max()
    if not top > 0:
        return []
    resp = np.where(resp < rel * top, 0.0, resp)
    return [fp for fp in select_feature_points(resp, sel, scale) if fp.response > 0]


def harris(img: np.ndarray, cfg: HarrisConfig = HarrisConfig(),
           sel: SelectionConfig = SelectionConfig()) -> list[FeaturePoint]:
    return _threshold_and_select(harris_response(img, cfg), cfg.rel_threshold, sel)


def harris_hdr(img: np.ndarray, cvm: CvmConfig = CvmConfig(), cfg: HarrisConfig = HarrisConfig(),
               sel: SelectionConfig = SelectionConfig()) -> list[FeaturePoint]:
    return _threshold_and_select(harris_response(img, cfg, cvm), cfg.rel_threshold, sel)


# ---------------------------------------------------------------------------
# DoG

def downsample2(img: np.ndarray) -> np.ndarray:
    """Halve both dimensions by 2x2 block averaging (odd edges dropped)."""
    h, w = img.shape[0] // 2 * 2, img.shape[1] // 2 * 2
    a = img[:h, :w]
    return 0.25 * (a[0::2, 0::2] + a[0::2, 1::2] + a[1::2, 0::2] + a[1::2, 1::2])


def octave_images(img: np.ndarray, octaves: int) -> list[np.ndarray]:
    """Resized copies of ``img``, halving each time; tiny octaves are dropped."""
    img = as_gray(img)
    if min(img.shape) < MIN_OCTAVE_SIDE:
        raise ImageTooSmall(f"image {img.shape} is smaller than {MIN_OCTAVE_SIDE} px per side")
    out = [img]
    while len(out) < octaves:
        nxt = downsample2(out[-1])
        if min(nxt.shape) < MIN_OCTAVE_SIDE:
            break
        out.append(nxt)
    return out


_NEIGHBOURS_26 = np.ones((3, 3, 3), dtype=bool)
_NEIGHBOURS_26[1, 1, 1] = False


def dog_extrema(base: np.ndarray, cfg: DogConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Scale-space extrema of one octave.

    Returns ``(rows, cols, |D|, sigma)`` for pixels strictly above or strictly
    below all 26 neighbours in the 3x3x3 DoG block. The one-pixel image
    border is never an extremum.
    """
    s = cfg.scales_per_octave
    sigmas = [cfg.sigma0 * 2.0 ** (i / s) for i in range(s + 3)]
    gauss = np.stack([gaussian_blur_sigma(base, sg) for sg in sigmas])
    dog = gauss[1:] - gauss[:-1]
    hi = ndimage.maximum_filter(dog, footprint=_NEIGHBOURS_26, mode="nearest")
    lo = ndimage.minimum_filter(dog, footprint=_NEIGHBOURS_26, mode="nearest")
    ext = (dog > hi) | (dog < lo)
    ext[0] = ext[-1] = False
    ext[:, [0, -1], :] = False
    ext[:, :, [0, -1]] = False
    layer, rows, cols = np.nonzero(ext)
    return rows, cols, np.abs(dog[layer, rows, cols]), np.asarray(sigmas)[layer]


def _dog_detect(img, cfg: DogConfig, sel: SelectionConfig, cvm: CvmConfig | None):
    img = as_gray(img)
    h, w = img.shape
    all_r, all_c, all_v, all_s = [], [], [], []
    for o, base in enumerate(octave_images(img, cfg.octaves)):
        if cvm is not None:
            base = cvm_filter(base, cvm)
        rows, cols, vals, sig = dog_extrema(base, cfg)
        f = 2 ** o
        all_r.append(np.minimum(rows * f + (f - 1) // 2, h - 1))
        all_c.append(np.minimum(cols * f + (f - 1) // 2, w - 1))
        all_v.append(vals)
        all_s.append(sig * f)
    rows, cols = np.concatenate(all_r), np.concatenate(all_c)
    vals, sig = np.concatenate(all_v), np.concatenate(all_s)
    if vals.size == 0:
        return []
    # scatter onto a base-resolution response image; on collisions the
    # strongest extremum wins (finer octave first on exact ties)
    resp = np.zeros((h, w))
    scale = np.ones((h, w))
    for i in sort_points(rows, cols, vals)[::-1]:
        resp[rows[i], cols[i]] = vals[i]
        scale[rows[i], cols[i]] = sig[i]
    return _threshold_and_select(resp, cfg.rel_threshold, sel, scale)


def dog(img: np.ndarray, octaves: int = 4, scales_per_octave: int = 3,
        sel: SelectionConfig = SelectionConfig(), sigma0: float = 1.6,
        rel_threshold: float = 0.01) -> list[FeaturePoint]:
    """Difference-of-Gaussians detector (integer-pixel, no refinement)."""
    cfg = DogConfig(octaves, scales_per_octave, sigma0, rel_threshold)
    return _dog_detect(img, cfg, sel, None)


def dog_hdr(img: np.ndarray, cvm: CvmConfig = CvmConfig(), octaves: int = 4,
            scales_per_octave: int = 3, sel: SelectionConfig = SelectionConfig(),
            sigma0: float = 1.6, rel_threshold: float = 0.01) -> list[FeaturePoint]:
    """DoG with the CVM applied to each octave's resized image before blurring."""
    cfg = DogConfig(octaves, scales_per_octave, sigma0, rel_threshold)
    return _dog_detect(img, cfg, sel, cvm)


# ---------------------------------------------------------------------------
# CSV serialisation

CSV_HEADER = ("row", "col", "response", "scale")


def format_number(v: float) -> str:
    return f"{v:.9g}"


def feature_points_to_csv(fps) -> str:
    buf = io.StringIO()
    buf.write(",".join(CSV_HEADER) + "\n")
    for fp in fps:
        buf.write(f"{fp.row},{fp.col},{format_number(fp.response)},{format_number(fp.scale)}\n")
    return buf.getvalue()


def write_feature_points(path, fps) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(feature_points_to_csv(fps))


def read_feature_points(path) -> list[FeaturePoint]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
            raise ValueError(f"{path}: expected header {','.join(CSV_HEADER)}")
        return [FeaturePoint(int(r), int(c), float(v), float(s)) for r, c, v, s in reader]


def points_array(fps) -> np.ndarray:
    """``(n, 2)`` float array of ``(row, col)``."""
    return np.array([(fp.row, fp.col) for fp in fps], dtype=np.float64).reshape(-1, 2)
