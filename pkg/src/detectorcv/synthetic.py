"""Synthetic HDR scenes with known structure, for tests and demos."""

from __future__ import annotations

import numpy as np


def hdr_checkerboard(height: int = 256, width: int = 256, square: int = 16, ratio: float = 1000.0,
                     contrast: float = 10.0, noise: float = 0.01, seed: int = 0) -> np.ndarray:
    """Checkerboard whose left half is ``ratio`` times brighter than the right.

    Squares alternate between 1 and ``contrast`` (times the half's level).
    Multiplicative log-normal noise of width ``noise`` breaks exact ties.
    """
    yy, xx = np.mgrid[0:height, 0:width]
    board = 1.0 + (contrast - 1.0) * ((yy // square + xx // square) % 2)
    lum = np.where(xx < width // 2, ratio, 1.0) * board
    if noise > 0:
        lum = lum * np.random.default_rng(seed).lognormal(0.0, noise, lum.shape)
    return lum


def dark_half(fps, width: int) -> int:
    """Number of feature points in the right (dark) half of a bipartite scene."""
    return sum(fp.col >= width // 2 for fp in fps)


def rectangle_grid(n: int = 6, rect_h: int = 16, rect_w: int = 12, gap: int = 22, margin: int = 20,
                   contrast: float = 20.0, decades: float = 4.0) -> tuple[np.ndarray, np.ndarray]:
    """Grid of bright rectangles on tiles whose level spans ``decades`` of range.

    Returns ``(image, junctions)`` where ``junctions`` holds the sub-pixel
    ``(row, col)`` of every rectangle corner and every tile-grid crossing.
    Rectangles (not squares) avoid mirror-symmetric corners, which would
    give two equal maxima and no strict one.
    """
    height = 2 * margin + n * rect_h + (n - 1) * gap
    width = 2 * margin + n * rect_w + (n - 1) * gap
    img = np.ones((height, width))
    levels = np.logspace(0.0, decades, n * n).reshape(n, n)
    pts = []
    for i in range(n):
        for j in range(n):
            r0 = margin + i * (rect_h + gap)
            c0 = margin + j * (rect_w + gap)
            img[r0 - gap // 2:r0 + rect_h + gap // 2, c0 - gap // 2:c0 + rect_w + gap // 2] = levels[i, j]
            img[r0:r0 + rect_h, c0:c0 + rect_w] = levels[i, j] * contrast
            for dr in (0, rect_h):
                for dc in (0, rect_w):
                    pts.append((r0 + dr - 0.5, c0 + dc - 0.5))
    for i in range(n + 1):
        for j in range(n + 1):
            pts.append((margin + i * (rect_h + gap) - gap // 2 - 0.5,
                        margin + j * (rect_w + gap) - gap // 2 - 0.5))
    return img, np.array(pts)


def gaussian_blob(height: int = 64, width: int = 64, center: tuple[float, float] = (32, 32),
                  sigma: float = 4.0, amplitude: float = 1.0) -> np.ndarray:
    yy, xx = np.mgrid[0:height, 0:width]
    r2 = (yy - center[0]) ** 2 + (xx - center[1]) ** 2
    return amplitude * np.exp(-r2 / (2.0 * sigma * sigma))


def bipartite_blobs(height: int = 128, width: int = 256, spacing: int = 32, sigma: float = 4.0,
                    ratio: float = 1000.0, floor: float = 0.05, noise: float = 0.01,
                    seed: int = 0) -> np.ndarray:
    """Lattice of equal blobs; the left half is ``ratio`` times brighter."""
    yy, xx = np.mgrid[0:height, 0:width]
    img = np.full((height, width), floor)
    rng = np.random.default_rng(seed)
    for r in range(spacing // 2, height, spacing):
        for c in range(spacing // 2, width, spacing):
            jitter = rng.uniform(-2, 2, size=2)
            img += np.exp(-((yy - r - jitter[0]) ** 2 + (xx - c - jitter[1]) ** 2) / (2 * sigma * sigma))
    img *= np.where(xx < width // 2, ratio, 1.0)
    if noise > 0:
        img *= rng.lognormal(0.0, noise, img.shape)
    return img
