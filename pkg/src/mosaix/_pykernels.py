"""Numpy fallback for the compiled matching kernels.

Same contract as mosaix._speedups: per query row, the minimum squared
Euclidean distance (float) or differing-bit count (barcode) over all
target rows. Loops over query rows to keep temporaries at (m, d) and to
stay off threaded BLAS paths, so results do not depend on thread count.
"""

from __future__ import annotations

import numpy as np


def min_sq_profile(q: np.ndarray, t: np.ndarray) -> np.ndarray:
    out = np.empty(q.shape[0], dtype=np.float64)
    for i in range(q.shape[0]):
        diff = t - q[i]
        np.multiply(diff, diff, out=diff)
        out[i] = diff.sum(axis=1).min()
    return out


def min_hamming_profile(q: np.ndarray, t: np.ndarray) -> np.ndarray:
    out = np.empty(q.shape[0], dtype=np.int64)
    for i in range(q.shape[0]):
        out[i] = (t != q[i]).sum(axis=1).min()
    return out
