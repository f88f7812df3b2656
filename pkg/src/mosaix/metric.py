"""Patch-level distances and the median-of-minimum set-to-set distance.

A WSI-to-WSI comparison is an organized combination of patch comparisons:
for every query mosaic patch take its distance to the nearest target
patch, then take the median of those minima. The measure is directed
(query vs target roles differ) and that asymmetry is intentional.
"""

from __future__ import annotations

import numpy as np

from mosaix import kernels
from mosaix.errors import (
    DimensionMismatch,
    EmptySet,
    MetricKindMismatch,
    TooShort,
    ZeroVector,
)
from mosaix.model import EmbeddingKind, EmbeddingSet, MedianRule, Metric

__all__ = [
    "patch_distance",
    "binarize_minmax",
    "median_of_min",
    "pairwise_min_profile",
    "distance_matrix",
    "prepare_matrix",
    "min_profile_prepared",
]


def _as_vector(v) -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionMismatch(f"expected a 1-D vector, got shape {arr.shape}")
    return arr


def patch_distance(a, b, metric: Metric) -> float:
    """Distance between two patch vectors.

    Cosine: 1 - a.b/(|a||b|), in [0, 2]. L2: Euclidean distance.
    Hamming: count of differing bits. Cosine is computed as half the
    squared distance of the normalized vectors, which is the same quantity
    but stays exactly 0 for identical inputs.
    """
    av, bv = _as_vector(a), _as_vector(b)
    if av.shape[0] != bv.shape[0]:
        raise DimensionMismatch(f"vector lengths differ: {av.shape[0]} vs {bv.shape[0]}")
    if metric is Metric.COSINE:
        na = float(np.sqrt(np.einsum("i,i->", av, av)))
        nb = float(np.sqrt(np.einsum("i,i->", bv, bv)))
        if na == 0.0 or nb == 0.0:
            raise ZeroVector("cosine distance undefined for zero-norm vectors")
        diff = av / na - bv / nb
        return min(0.5 * float(np.einsum("i,i->", diff, diff)), 2.0)
    if metric is Metric.L2:
        diff = av - bv
        return float(np.sqrt(np.einsum("i,i->", diff, diff)))
    # Hamming
    ai, bi = np.asarray(a), np.asarray(b)
    if not (np.all((ai == 0) | (ai == 1)) and np.all((bi == 0) | (bi == 1))):
        raise MetricKindMismatch("hamming distance requires binary (0/1) vectors")
    return int(np.count_nonzero(ai != bi))


def binarize_minmax(v) -> np.ndarray:
    """Barcode of a float vector: bit[i] = 1 iff v[i+1] > v[i].

    Output length is one less than the input; equal neighbors give 0.
    """
    arr = _as_vector(v)
    if arr.shape[0] < 2:
        raise TooShort(f"need at least 2 entries to binarize, got {arr.shape[0]}")
    return (arr[1:] > arr[:-1]).astype(np.uint8)


def _median(values: np.ndarray, rule: MedianRule) -> float:
    s = np.sort(values)
    n = s.shape[0]
    if n % 2 == 1:
        return float(s[n // 2])
    if rule is MedianRule.LOWER_MEDIAN:
        return float(s[n // 2 - 1])
    return float((s[n // 2 - 1] + s[n // 2]) / 2.0)


def _coerce(x, metric: Metric) -> np.ndarray:
    """Accept an EmbeddingSet or a bare 2-D array; check kind, return rows."""
    if isinstance(x, EmbeddingSet):
        if metric is Metric.HAMMING and x.kind is not EmbeddingKind.BARCODE:
            raise MetricKindMismatch("hamming distance requires barcode embedding sets")
        if metric is not Metric.HAMMING and x.kind is not EmbeddingKind.FLOAT:
            raise MetricKindMismatch(f"{metric.value} distance requires float embedding sets")
        arr = x.vectors
    else:
        arr = np.asarray(x)
        if arr.ndim != 2:
            raise DimensionMismatch(f"expected an (n, d) matrix, got shape {arr.shape}")
    if arr.shape[0] == 0:
        raise EmptySet("embedding set has zero rows")
    return arr


def prepare_matrix(x, metric: Metric) -> np.ndarray:
    """Rows of x ready for the matching kernels.

    Float metrics get contiguous float64 rows; cosine rows are additionally
    unit-normalized (so the kernel's squared distance is 2*(1-cos)).
    Raises ZeroVector if cosine meets a zero-norm row.
    """
    arr = _coerce(x, metric)
    if metric is Metric.HAMMING:
        return np.ascontiguousarray(arr, dtype=np.uint8)
    mat = np.ascontiguousarray(arr, dtype=np.float64)
    if metric is Metric.COSINE:
        norms = np.sqrt(np.einsum("ij,ij->i", mat, mat))
        if np.any(norms == 0.0):
            raise ZeroVector("cosine distance undefined for zero-norm vectors")
        mat = mat / norms[:, None]
    return mat


def min_profile_prepared(q: np.ndarray, t: np.ndarray, metric: Metric) -> np.ndarray:
    """Per-query-row minimum distances, from prepare_matrix() outputs."""
    if q.shape[1] != t.shape[1]:
        raise DimensionMismatch(f"embedding dims differ: {q.shape[1]} vs {t.shape[1]}")
    if metric is Metric.HAMMING:
        return kernels.min_hamming_profile(q, t).astype(np.float64)
    sq = kernels.min_sq_profile(q, t)
    if metric is Metric.COSINE:
        return np.minimum(0.5 * sq, 2.0)
    return np.sqrt(sq)


def pairwise_min_profile(query, target, metric: Metric) -> np.ndarray:
    """The per-patch minima underlying median_of_min, in query row order."""
    return min_profile_prepared(prepare_matrix(query, metric),
                                prepare_matrix(target, metric), metric)


def median_of_min(query, target, metric: Metric,
                  median_rule: MedianRule = MedianRule.MIDPOINT_AVERAGE) -> float:
    """Median over query patches of the distance to the nearest target patch.

    For an even patch count the median is the mean of the two middle values
    (MIDPOINT_AVERAGE) or the lower of them (LOWER_MEDIAN, which keeps the
    measure an order statistic).
    """
    return _median(pairwise_min_profile(query, target, metric), median_rule)


def distance_matrix(query, target, metric: Metric) -> np.ndarray:
    """Full n x m patch distance matrix; diagnostics only, not the hot path."""
    q = prepare_matrix(query, metric)
    t = prepare_matrix(target, metric)
    if q.shape[1] != t.shape[1]:
        raise DimensionMismatch(f"embedding dims differ: {q.shape[1]} vs {t.shape[1]}")
    out = np.empty((q.shape[0], t.shape[0]), dtype=np.float64)
    for i in range(q.shape[0]):
        if metric is Metric.HAMMING:
            out[i] = (t != q[i]).sum(axis=1)
        else:
            diff = t - q[i]
            np.multiply(diff, diff, out=diff)
            row = diff.sum(axis=1)
            out[i] = np.minimum(0.5 * row, 2.0) if metric is Metric.COSINE else np.sqrt(row)
    return out
