"""Detector quality metrics and Pareto-dominance analysis.

* repeatability rate: ``R_rt / min(n_r, n_t, M)`` where ``R_rt`` counts
  reference points re-detected in the test image;
* uniformity: ``1 - (max_i a_i/T - min_i a_i/T)`` over the areas of a
  :class:`~detectorcv.image_core.PartitionMap`;
* vector dominance on ``(uniformity, rr)`` pairs, strict in both components.

Re-detection uses one-to-one greedy matching in ascending distance order
with a pixel tolerance (1.5 px by default).
"""

from __future__ import annotations

import warnings
from collections.abc import Callable, Hashable, Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy.spatial import cKDTree

from .errors import AllOnBackground, DegenerateInputs, SingleSubgroup
from .detectors import points_array
from .image_core import PartitionMap

MATCH_EPS = 1.5
MAX_POINTS = 500


@dataclass(frozen=True)
class Correspondence:
    """Maps reference-image coordinates into the test image.

    ``matrix`` is a 3x3 homography acting on ``(col, row, 1)``; ``None``
    means identity.
    """

    matrix: np.ndarray | None = None

    def __post_init__(self):
        if self.matrix is not None:
            m = np.asarray(self.matrix, dtype=np.float64).reshape(3, 3)
            if abs(np.linalg.det(m)) <= 1e-12:
                raise ValueError("homography is singular")
            object.__setattr__(self, "matrix", m)

    @property
    def is_identity(self) -> bool:
        return self.matrix is None

    def map_points(self, rc: np.ndarray) -> np.ndarray:
        """Map ``(n, 2)`` ``(row, col)`` points; returns float ``(row, col)``."""
        rc = np.asarray(rc, dtype=np.float64).reshape(-1, 2)
        if self.matrix is None:
            return rc.copy()
        xyw = np.column_stack([rc[:, 1], rc[:, 0], np.ones(len(rc))]) @ self.matrix.T
        return np.column_stack([xyw[:, 1] / xyw[:, 2], xyw[:, 0] / xyw[:, 2]])

    def inverse(self) -> Correspondence:
        return self if self.matrix is None else Correspondence(np.linalg.inv(self.matrix))

    def then(self, other: Correspondence) -> Correspondence:
        """Apply ``self`` first, then ``other``."""
        if self.matrix is None:
            return other
        if other.matrix is None:
            return self
        return Correspondence(other.matrix @ self.matrix)


def load_homography(path) -> Correspondence:
    """Read 9 whitespace-separated floats (row-major) as a homography."""
    with open(path, encoding="utf-8") as fh:
        vals = [float(t) for t in fh.read().split()]
    if len(vals) != 9:
        raise ValueError(f"{path}: expected 9 numbers, found {len(vals)}")
    return Correspondence(np.array(vals).reshape(3, 3))


@dataclass(frozen=True)
class RepeatabilityResult:
    rr: float
    matched: int
    n_ref: int
    n_test: int


def greedy_match(a: np.ndarray, b: np.ndarray, eps: float) -> list[tuple[int, int]]:
    """One-to-one matching of point sets by ascending distance, within ``eps``.

    Ties are broken by index in ``a`` and then in ``b``.
    """
    if len(a) == 0 or len(b) == 0:
        return []
    pairs = cKDTree(a).sparse_distance_matrix(cKDTree(b), eps, output_type="ndarray")
    if pairs.size == 0:
        return []
    order = np.lexsort((pairs["j"], pairs["i"], pairs["v"]))
    used_a, used_b, out = set(), set(), []
    for k in order:
        i, j = int(pairs["i"][k]), int(pairs["j"][k])
        if i not in used_a and j not in used_b:
            used_a.add(i)
            used_b.add(j)
            out.append((i, j))
    return out


def repeatability(ref_fps, test_fps, corr: Correspondence | None = None, eps_px: float = MATCH_EPS,
                  max_points: int = MAX_POINTS,
                  test_shape: tuple[int, int] | None = None) -> RepeatabilityResult:
    """Repeatability of ``ref_fps`` in ``test_fps``.

    Only the first ``max_points`` of each list take part. Reference points
    that ``corr`` maps outside ``test_shape`` are dropped before counting.
    """
    if eps_px <= 0:
        raise ValueError("eps_px must be positive")
    if max_points < 1:
        raise ValueError("max_points must be >= 1")
    corr = corr or Correspondence()
    ref = corr.map_points(points_array(list(ref_fps)[:max_points]))
    test = points_array(list(test_fps)[:max_points])
    if test_shape is not None:
        h, w = test_shape
        inside = ((ref[:, 0] >= -0.5) & (ref[:, 0] < h - 0.5)
                  & (ref[:, 1] >= -0.5) & (ref[:, 1] < w - 0.5))
        ref = ref[inside]
    n_r, n_t = len(ref), len(test)
    if n_r == 0 or n_t == 0:
        warnings.warn("repeatability of an empty feature point set is 0", DegenerateInputs, stacklevel=2)
        return RepeatabilityResult(0.0, 0, n_r, n_t)
    matched = len(greedy_match(ref, test, eps_px))
    return RepeatabilityResult(matched / min(n_r, n_t, max_points), matched, n_r, n_t)


def repeatability_rate(ref_fps, test_fps, corr: Correspondence | None = None,
                       eps_px: float = MATCH_EPS, max_points: int = MAX_POINTS,
                       test_shape: tuple[int, int] | None = None) -> float:
    return repeatability(ref_fps, test_fps, corr, eps_px, max_points, test_shape).rr


def area_counts(fps, part: PartitionMap) -> np.ndarray:
    """Feature points per area (index 0 = Area(1)); background hits are dropped."""
    rc = points_array(list(fps)).astype(np.int64)
    h, w = part.shape
    ok = (rc[:, 0] >= 0) & (rc[:, 0] < h) & (rc[:, 1] >= 0) & (rc[:, 1] < w)
    labels = part.labels[rc[ok, 0], rc[ok, 1]]
    return np.bincount(labels, minlength=part.n_areas + 1)[1:]


def uniformity(fps, part: PartitionMap) -> float:
    """``1 - (max - min)`` of the per-area point fractions.

    Areas with no pixels at all (e.g. the empty side of a degenerate
    dark/bright split) are left out, so a single effective area scores 1.
    """
    counts = area_counts(fps, part)[part.area_sizes() > 0]
    total = counts.sum()
    if total == 0:
        warnings.warn("no feature point lies on a non-background area", AllOnBackground, stacklevel=2)
        return 0.0
    frac = counts / total
    return float(1.0 - (frac.max() - frac.min()))


# ---------------------------------------------------------------------------
# dominance

@dataclass(frozen=True)
class EvalVector:
    uniformity: float
    rr: float
    tag: Any = None


def _coerce(v) -> EvalVector:
    if isinstance(v, EvalVector):
        return v
    return EvalVector(float(v[0]), float(v[1]))


def dominates(u, v) -> bool:
    """True iff ``u`` is strictly better than ``v`` in both components."""
    u, v = _coerce(u), _coerce(v)
    return u.uniformity > v.uniformity and u.rr > v.rr


def _dominance_rows(vals: np.ndarray, chunk: int = 1024):
    """Yield ``(start, block)`` with ``block[i, j]`` = vector start+i dominates j."""
    for s in range(0, len(vals), chunk):
        blk = vals[s:s + chunk]
        yield s, ((blk[:, None, 0] > vals[None, :, 0]) & (blk[:, None, 1] > vals[None, :, 1]))


def _as_array(vectors: Sequence[EvalVector]) -> np.ndarray:
    return np.array([(v.uniformity, v.rr) for v in vectors], dtype=np.float64).reshape(-1, 2)


def dominance_counts(vectors: Sequence, subgroup_of: Callable[[Any], Hashable]) -> dict[Hashable, int]:
    """Per subgroup, how many vectors of *other* subgroups its members dominate.

    ``subgroup_of`` is applied to each vector's tag.
    """
    vectors = [_coerce(v) for v in vectors]
    keys = [subgroup_of(v.tag) for v in vectors]
    distinct = list(dict.fromkeys(keys))
    if len(distinct) < 2:
        raise SingleSubgroup("dominance counting needs at least two subgroups")
    code_of = {k: i for i, k in enumerate(distinct)}
    codes = np.array([code_of[k] for k in keys])
    per_vector = np.zeros(len(vectors), dtype=np.int64)
    vals = _as_array(vectors)
    for s, block in _dominance_rows(vals):
        cross = codes[s:s + len(block), None] != codes[None, :]
        per_vector[s:s + len(block)] = (block & cross).sum(axis=1)
    totals = np.bincount(codes, weights=per_vector, minlength=len(distinct))
    return {k: int(totals[code_of[k]]) for k in distinct}


def pareto_mask(vectors: Sequence) -> np.ndarray:
    vals = _as_array([_coerce(v) for v in vectors])
    dominated = np.zeros(len(vals), dtype=bool)
    for _, block in _dominance_rows(vals):
        dominated |= block.any(axis=0)
    return ~dominated


def pareto_front(vectors: Sequence) -> list[EvalVector]:
    """Vectors not dominated by any other, in input order."""
    vectors = [_coerce(v) for v in vectors]
    if not vectors:
        raise ValueError("pareto_front needs at least one vector")
    return [v for v, keep in zip(vectors, pareto_mask(vectors)) if keep]
