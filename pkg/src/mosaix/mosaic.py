"""Mosaic selection: cluster patches by color features, then sample a
spatially spread subset from every cluster.

Everything here is deterministic given the seed and invariant to the
order patches arrive in: clustering runs over a canonical (lexicographic)
ordering of the feature rows, and all ties break toward the smaller
patch_id.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from mosaix.errors import DimensionMismatch, EmptyInput, FormatError
from mosaix.model import PatchRecord

__all__ = [
    "MosaicParams",
    "cluster_patches",
    "build_mosaic",
    "read_patch_csv",
    "write_patch_csv",
    "read_mosaic_json",
    "write_mosaic_json",
]

KMEANS_MAX_ITER = 100
KMEANS_TOL = 1e-6


@dataclass(frozen=True)
class MosaicParams:
    """Mosaic knobs. Defaults follow the search-engine recipe this method
    comes from (9 color clusters, ~15% of each cluster); the source method
    publishes no numbers, so everything stays configurable."""

    n_clusters: int = 9
    selection_fraction: float = 0.15
    min_per_cluster: int = 1
    rng_seed: int = 0

    def __post_init__(self):
        if self.n_clusters < 1:
            raise ValueError(f"n_clusters must be >= 1, got {self.n_clusters}")
        if not (0.0 < self.selection_fraction <= 1.0):
            raise ValueError(f"selection_fraction must be in (0, 1], got {self.selection_fraction}")
        if self.min_per_cluster < 1:
            raise ValueError(f"min_per_cluster must be >= 1, got {self.min_per_cluster}")
        if not (0 <= self.rng_seed < 2 ** 64):
            raise ValueError("rng_seed must fit in an unsigned 64-bit integer")


def _feature_matrix(patches: Sequence[PatchRecord]) -> np.ndarray:
    if not patches:
        raise EmptyInput("no patches to cluster")
    lengths = {len(p.color_features) for p in patches}
    if len(lengths) != 1:
        raise DimensionMismatch(f"color_features lengths differ: {sorted(lengths)}")
    return np.array([p.color_features for p in patches], dtype=np.float64)


def _sq_dist_to(points: np.ndarray, center: np.ndarray) -> np.ndarray:
    diff = points - center
    return np.einsum("ij,ij->i", diff, diff)


def _kmeans_canonical(xs: np.ndarray, k: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Lloyd's algorithm with k-means++ seeding on pre-sorted rows.

    Empty clusters keep their previous centroid; assignment ties go to the
    lowest centroid index. Stops when no centroid moves more than
    KMEANS_TOL or after KMEANS_MAX_ITER rounds.
    """
    n = xs.shape[0]
    rng = np.random.default_rng(seed)

    centroids = np.empty((k, xs.shape[1]), dtype=np.float64)
    centroids[0] = xs[rng.integers(n)]
    d2 = _sq_dist_to(xs, centroids[0])
    for i in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            # fewer distinct rows than requested centers; caller prevents this
            centroids[i] = xs[0]
            continue
        centroids[i] = xs[rng.choice(n, p=d2 / total)]
        np.minimum(d2, _sq_dist_to(xs, centroids[i]), out=d2)

    assign = np.zeros(n, dtype=np.int64)
    for _ in range(KMEANS_MAX_ITER):
        dists = np.stack([_sq_dist_to(xs, c) for c in centroids], axis=1)
        assign = np.argmin(dists, axis=1)
        moved = 0.0
        new_centroids = centroids.copy()
        for c in range(k):
            members = xs[assign == c]
            if len(members):
                new_centroids[c] = members.mean(axis=0)
                moved = max(moved, float(np.linalg.norm(new_centroids[c] - centroids[c])))
        centroids = new_centroids
        if moved <= KMEANS_TOL:
            break
    dists = np.stack([_sq_dist_to(xs, c) for c in centroids], axis=1)
    assign = np.argmin(dists, axis=1)
    return assign, centroids


def _cluster(patches: Sequence[PatchRecord], n_clusters: int, rng_seed: int):
    x = _feature_matrix(patches)
    k = min(n_clusters, np.unique(x, axis=0).shape[0])
    order = np.lexsort(x.T[::-1])  # canonical row order: order-invariant clustering
    assign_sorted, centroids = _kmeans_canonical(x[order], k, rng_seed)
    assign = np.empty(len(patches), dtype=np.int64)
    assign[order] = assign_sorted
    return assign, centroids


def cluster_patches(patches: Sequence[PatchRecord], n_clusters: int, rng_seed: int) -> list[int]:
    """K-means cluster index per patch, k = min(n_clusters, distinct features)."""
    assign, _ = _cluster(patches, n_clusters, rng_seed)
    return [int(c) for c in assign]


def _round_half_away(x: float) -> int:
    return int(math.floor(x + 0.5))  # x is never negative here


def _target_size(cluster_size: int, params: MosaicParams) -> int:
    want = max(params.min_per_cluster, _round_half_away(params.selection_fraction * cluster_size))
    return min(cluster_size, want)


def _farthest_point_sample(members: list[PatchRecord], seed_idx: int, count: int) -> list[int]:
    """Greedy max-min selection on (x, y); ties to the earlier (smaller id) patch."""
    coords = np.array([(p.x, p.y) for p in members], dtype=np.float64)
    selected = [seed_idx]
    min_dist = np.linalg.norm(coords - coords[seed_idx], axis=1)
    while len(selected) < count:
        nxt = int(np.argmax(min_dist))
        selected.append(nxt)
        np.minimum(min_dist, np.linalg.norm(coords - coords[nxt], axis=1), out=min_dist)
    return [members[i].patch_id for i in selected]


def build_mosaic(patches: Sequence[PatchRecord], params: MosaicParams) -> list[int]:
    """Select the mosaic patch ids for one slide.

    Per cluster, picks max(min_per_cluster, round(fraction * size)) patches
    (capped at the cluster size) by farthest-point sampling on patch
    coordinates, seeded at the patch nearest the cluster's feature
    centroid. Returns the ids sorted ascending.
    """
    assign, centroids = _cluster(patches, params.n_clusters, params.rng_seed)
    by_id = sorted(range(len(patches)), key=lambda i: patches[i].patch_id)

    chosen: list[int] = []
    for c in range(centroids.shape[0]):
        member_idx = [i for i in by_id if assign[i] == c]
        if not member_idx:
            continue
        members = [patches[i] for i in member_idx]
        feats = np.array([p.color_features for p in members], dtype=np.float64)
        seed_idx = int(np.argmin(_sq_dist_to(feats, centroids[c])))
        chosen.extend(_farthest_point_sample(members, seed_idx, _target_size(len(members), params)))
    return sorted(chosen)


# --- slide-level files: patch table CSV and mosaic JSON ---

_FIXED_COLUMNS = ["patch_id", "x", "y", "width", "height"]


def write_mosaic_json(mosaics: dict[str, list[int]], path: str | Path):
    """Write {wsi_id: [patch ids]} mappings; the id lists stay sorted."""
    payload = {wsi_id: sorted(int(i) for i in ids) for wsi_id, ids in mosaics.items()}
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")


def read_mosaic_json(path: str | Path) -> dict[str, list[int]]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, dict):
        raise FormatError(f"{path}: mosaic JSON must map wsi_id to patch id lists")
    out = {}
    for wsi_id, ids in data.items():
        if not isinstance(ids, list) or not all(isinstance(i, int) for i in ids):
            raise FormatError(f"{path}: mosaic for {wsi_id!r} must be a list of integers")
        out[wsi_id] = ids
    return out


def read_patch_csv(path: str | Path) -> list[PatchRecord]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty patch table") from None
        if header[: len(_FIXED_COLUMNS)] != _FIXED_COLUMNS:
            raise FormatError(
                f"{path}: patch table header must start with {','.join(_FIXED_COLUMNS)}")
        feature_cols = header[len(_FIXED_COLUMNS):]
        expected = [f"f{i}" for i in range(len(feature_cols))]
        if feature_cols != expected:
            raise FormatError(f"{path}: feature columns must be f0..f{len(feature_cols) - 1}")

        patches = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise FormatError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                patches.append(PatchRecord(
                    patch_id=int(row[0]), x=int(row[1]), y=int(row[2]),
                    width=int(row[3]), height=int(row[4]),
                    color_features=tuple(float(v) for v in row[5:]),
                ))
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from None
    ids = [p.patch_id for p in patches]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise FormatError(f"{path}: duplicate patch_id values {dupes}")
    return patches


def write_patch_csv(patches: Sequence[PatchRecord], path: str | Path):
    if not patches:
        raise EmptyInput("refusing to write an empty patch table")
    n_features = len(patches[0].color_features)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_FIXED_COLUMNS + [f"f{i}" for i in range(n_features)])
        for p in patches:
            writer.writerow([p.patch_id, p.x, p.y, p.width, p.height]
                            + [repr(v) for v in p.color_features])
