"""Selection grid: every DetectorCV stage combination over a dataset.

The manifest is JSON::

    {"images": [
        {"path": "scene_a/0.hdr", "type": "HDR", "dataset": "2DLighting",
         "group": "scene_a", "labels": "scene_a/areas.pgm"},
        {"path": "scene_a/1.hdr", "type": "HDR", "dataset": "2DLighting",
         "group": "scene_a", "labels": "scene_a/areas.pgm",
         "homography": "scene_a/H01.txt"}
    ]}

Relative paths resolve against the manifest's directory. Instead of
``labels`` an entry may give ``background`` (a mask, 0 = background), in
which case the dark/bright partition is computed from the image. Images of
``type`` ``logHDR`` are log-encoded and stored at 16-bit precision before
detection. A ``homography`` maps the first image of the entry's group onto
this image; images without one share the first image's frame.

Every pair of images ``(i, j)``, ``i < j``, of the same dataset, type and
group produces one row per combination. Uniformity of a pair is the mean of
the two images' uniformity.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import os
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .cvm import CvmConfig, cvm_filter
from .detectors import DetectorConfig, SelectionConfig, format_number, select_feature_points
from .evaluation import (
    MATCH_EPS,
    Correspondence,
    EvalVector,
    dominance_counts,
    load_homography,
    pareto_mask,
    repeatability,
    uniformity,
)
from .filters import FilterSpec, TransformSpec, apply_filter, apply_transform
from .image_core import load_background_mask, load_image, load_label_map, log_encode, normalize_u16
from .partitioning import partition_image

log = logging.getLogger(__name__)

GRID_HEADER = ("combo_id", "dataset", "type", "image_ref", "image_test", "uniformity", "rr")
IMAGE_TYPES = ("HDR", "logHDR")


def _default_cvm():
    return (CvmConfig(sigma_c=None), CvmConfig(sigma_c=1.0), CvmConfig(sigma_c=1.5), CvmConfig(sigma_c=2.0))


def _default_transforms():
    return (TransformSpec("linear"), TransformSpec("log"), TransformSpec("histeq"))


def _default_filters():
    return (FilterSpec("gaussian", side=5), FilterSpec("gaussian", side=9), FilterSpec("gaussian", side=15),
            FilterSpec("bilateral", sigma=150.0), FilterSpec("bilateral", sigma=175.0),
            FilterSpec("bilateral", sigma=200.0))


@dataclass(frozen=True)
class GridSpec:
    cvm_options: tuple = field(default_factory=_default_cvm)
    transforms: tuple = field(default_factory=_default_transforms)
    filters: tuple = field(default_factory=_default_filters)
    selection: SelectionConfig = field(default_factory=SelectionConfig)
    eps_px: float = MATCH_EPS

    def combos(self) -> list[tuple[str, DetectorConfig]]:
        return [(combo_id(c, t, f), DetectorConfig(c, t, f, self.selection))
                for c, t, f in itertools.product(self.cvm_options, self.transforms, self.filters)]

    def __len__(self):
        return len(self.cvm_options) * len(self.transforms) * len(self.filters)


def combo_id(cvm: CvmConfig, t: TransformSpec, f: FilterSpec) -> str:
    return f"{cvm.label}|{t.label}|{f.label}"


def parse_combo_id(cid: str) -> dict[str, str]:
    cvm, transform, filt = cid.split("|")
    return {"cvm": cvm, "transform": transform, "filter": filt.partition(":")[0], "filter_param": filt}


class GridTag(NamedTuple):
    combo_id: str
    dataset: str
    type: str
    image_ref: str
    image_test: str


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    type: str = "HDR"
    dataset: str = "dataset"
    group: str = "default"
    labels: str | None = None
    background: str | None = None
    homography: str | None = None
    root: str = "."

    def resolve(self, p: str | None) -> str | None:
        return None if p is None else os.path.join(self.root, p)


def load_manifest(path) -> list[ManifestEntry]:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    items = doc["images"] if isinstance(doc, dict) else doc
    root = os.path.dirname(os.path.abspath(path))
    entries = []
    for item in items:
        if "path" not in item:
            raise ValueError(f"manifest entry without 'path': {item}")
        kind = item.get("type", "HDR")
        if kind not in IMAGE_TYPES:
            raise ValueError(f"image type must be one of {IMAGE_TYPES}, got {kind!r}")
        if item.get("labels") and item.get("background"):
            raise ValueError(f"{item['path']}: give either 'labels' or 'background', not both")
        entries.append(ManifestEntry(
            path=item["path"], type=kind, dataset=str(item.get("dataset", "dataset")),
            group=str(item.get("group", "default")), labels=item.get("labels"),
            background=item.get("background"), homography=item.get("homography"), root=root))
    return entries


def prepare_image(entry: ManifestEntry):
    """Load the detector input, its partition and its frame correspondence."""
    linear = load_image(entry.resolve(entry.path))
    if entry.labels:
        part = load_label_map(entry.resolve(entry.labels), linear.shape)
    else:
        bg = load_background_mask(entry.resolve(entry.background), linear.shape) if entry.background else None
        part = partition_image(linear, bg)
    img = normalize_u16(log_encode(linear)) if entry.type == "logHDR" else linear
    corr = load_homography(entry.resolve(entry.homography)) if entry.homography else Correspondence()
    return img, part, corr


def detect_all(img: np.ndarray, grid: GridSpec) -> dict[str, list]:
    """Feature points for every combination, sharing stage outputs."""
    out = {}
    for c in grid.cvm_options:
        cv = cvm_filter(img, c)
        for t in grid.transforms:
            tr = apply_transform(cv, t)
            for f in grid.filters:
                out[combo_id(c, t, f)] = select_feature_points(apply_filter(tr, f), grid.selection)
    return out


def _process_entry(entry: ManifestEntry, grid: GridSpec):
    try:
        img, part, corr = prepare_image(entry)
        return {"fps": detect_all(img, grid), "part": part, "corr": corr, "shape": img.shape}, None
    except Exception as exc:  # one bad image must not stop the grid
        return None, f"{entry.path}: {type(exc).__name__}: {exc}"


def run_selection_grid(entries: list[ManifestEntry], grid: GridSpec = GridSpec(), jobs: int = 1,
                       failures: list[str] | None = None) -> list[EvalVector]:
    """One :class:`EvalVector` per (combination, image pair), tagged with a :class:`GridTag`.

    Rows are ordered by combination, then by pair in manifest order. Images
    that fail to load or detect are reported through ``failures`` (and the
    log) and their pairs skipped.
    """
    if not entries:
        return []
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_process_entry, entries, itertools.repeat(grid)))
    else:
        results = [_process_entry(e, grid) for e in entries]

    for _, err in results:
        if err is not None:
            log.warning("grid: %s", err)
            if failures is not None:
                failures.append(err)

    groups = defaultdict(list)
    for idx, e in enumerate(entries):
        groups[(e.dataset, e.type, e.group)].append(idx)
    pairs = []
    for key, members in groups.items():
        if len(members) < 2:
            msg = f"group {'/'.join(key)} has a single image, no pair to evaluate"
            log.warning("grid: %s", msg)
            if failures is not None:
                failures.append(msg)
        pairs.extend(itertools.combinations(members, 2))
    pairs.sort()

    rows = []
    for cid, _ in grid.combos():
        for i, j in pairs:
            ri, rj = results[i][0], results[j][0]
            if ri is None or rj is None:
                continue
            corr = ri["corr"].inverse().then(rj["corr"])
            rep = repeatability(ri["fps"][cid], rj["fps"][cid], corr, grid.eps_px,
                                grid.selection.max_points, rj["shape"])
            u = 0.5 * (uniformity(ri["fps"][cid], ri["part"]) + uniformity(rj["fps"][cid], rj["part"]))
            tag = GridTag(cid, entries[i].dataset, entries[i].type, entries[i].path, entries[j].path)
            rows.append(EvalVector(u, rep.rr, tag))
    return rows


# ---------------------------------------------------------------------------
# CSV and reports

def grid_to_csv(vectors: list[EvalVector]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(GRID_HEADER)
    for v in vectors:
        t = v.tag
        w.writerow([t.combo_id, t.dataset, t.type, t.image_ref, t.image_test,
                    format_number(v.uniformity), format_number(v.rr)])
    return buf.getvalue()


def write_grid_csv(path, vectors: list[EvalVector]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(grid_to_csv(vectors))


def read_grid_csv(path) -> list[EvalVector]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != GRID_HEADER:
            raise ValueError(f"{path}: expected header {','.join(GRID_HEADER)}")
        return [EvalVector(float(r["uniformity"]), float(r["rr"]),
                           GridTag(r["combo_id"], r["dataset"], r["type"], r["image_ref"], r["image_test"]))
                for r in reader]


GROUP_KEYS = ("cvm", "transform", "filter", "filter_param")


def subgroup_key(group_by: str):
    """Build a tag -> subgroup function from e.g. ``"transform+filter"``."""
    keys = [k.strip() for k in group_by.split("+")]
    for k in keys:
        if k not in GROUP_KEYS:
            raise ValueError(f"unknown grouping key {k!r}; use {'+'.join(GROUP_KEYS)} parts")

    def key(tag: GridTag) -> str:
        parts = parse_combo_id(tag.combo_id)
        return "+".join(parts[k] for k in keys)

    return key


def _round(v: float) -> float:
    return float(format_number(v))


def dominance_report(vectors: list[EvalVector], group_by: str = "transform+filter") -> dict:
    """Table-style dominance counts within each dataset-type group.

    Returns ``counts`` summed over groups, per-group ``by_group`` tables,
    per-combination ``means`` and each group's Pareto front.
    """
    key = subgroup_key(group_by)
    by_group = defaultdict(list)
    for v in vectors:
        by_group[f"{v.tag.dataset}-{v.tag.type}"].append(v)

    report = {"group_by": group_by, "counts": {}, "by_group": {}, "means": {}, "pareto_front": {}}
    totals = defaultdict(int)
    for g, vs in by_group.items():
        counts = dominance_counts(vs, key)
        report["by_group"][g] = counts
        for k, n in counts.items():
            totals[k] += n
        sums = defaultdict(lambda: [0.0, 0.0, 0])
        for v in vs:
            s = sums[v.tag.combo_id]
            s[0] += v.uniformity
            s[1] += v.rr
            s[2] += 1
        report["means"][g] = {cid: {"uniformity": _round(u / n), "rr": _round(r / n), "pairs": n}
                              for cid, (u, r, n) in sums.items()}
        report["pareto_front"][g] = [
            {"combo_id": v.tag.combo_id, "image_ref": v.tag.image_ref, "image_test": v.tag.image_test,
             "uniformity": _round(v.uniformity), "rr": _round(v.rr)}
            for v, keep in zip(vs, pareto_mask(vs)) if keep]
    report["counts"] = dict(totals)
    return report


def write_scatter_svg(path, vectors: list[EvalVector], size: int = 480) -> None:
    """Uniformity (x) vs repeatability (y) scatter; Pareto members drawn red."""
    keep = pareto_mask(vectors) if vectors else np.zeros(0, dtype=bool)
    pad = 40
    span = size - 2 * pad
    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}">',
             f'<rect x="{pad}" y="{pad}" width="{span}" height="{span}" fill="none" stroke="black"/>',
             f'<text x="{size / 2}" y="{size - 8}" text-anchor="middle">uniformity</text>',
             f'<text x="12" y="{size / 2}" transform="rotate(-90 12 {size / 2})" '
             f'text-anchor="middle">repeatability rate</text>']
    for v, front in zip(vectors, keep):
        x = pad + span * min(max(v.uniformity, 0.0), 1.0)
        y = pad + span * (1.0 - min(max(v.rr, 0.0), 1.0))
        colour = "red" if front else "steelblue"
        lines.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="3" fill="{colour}"/>')
    lines.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
