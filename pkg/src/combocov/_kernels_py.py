"""Numpy fallback for the combination-key kernels.

Mirrors the compiled extension in ``_kernels.pyx``: identical signatures,
identical results. Vectorizes across records, one pass per factor subset.
"""

from __future__ import annotations

from itertools import combinations
from math import comb

import numpy as np


def enumerate_keys(
    assignments: np.ndarray, cell_base: np.ndarray, t: int, width: int
) -> np.ndarray:
    """Encode every t-way combination of every record as a packed int64 key.

    ``assignments`` is an (n, k) int64 matrix of value indices; ``cell_base``
    gives each factor's offset into the global value-cell numbering; keys pack
    the t chosen cells, ``width`` bits each, in ascending factor order.
    Returns an (n, C(k, t)) int64 matrix.
    """
    n, k = assignments.shape
    m = comb(k, t)
    out = np.empty((n, m), dtype=np.int64)
    if n == 0:
        return out
    cells = assignments + cell_base[np.newaxis, :]
    for col, subset in enumerate(combinations(range(k), t)):
        key = np.zeros(n, dtype=np.int64)
        for f_idx in subset:
            key = (key << width) | cells[:, f_idx]
        out[:, col] = key
    return out


def missing_per_record(
    assignments: np.ndarray,
    cell_base: np.ndarray,
    t: int,
    width: int,
    source_keys: np.ndarray,
) -> np.ndarray:
    """Count, per record, how many of its combination keys are absent from
    ``source_keys`` (a sorted int64 array)."""
    keys = enumerate_keys(assignments, cell_base, t, width)
    n, m = keys.shape
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    if source_keys.shape[0] == 0:
        return np.full(n, m, dtype=np.int64)
    flat = keys.ravel()
    pos = np.searchsorted(source_keys, flat)
    found = np.zeros(flat.shape[0], dtype=bool)
    in_range = pos < source_keys.shape[0]
    found[in_range] = source_keys[pos[in_range]] == flat[in_range]
    return (~found).reshape(n, m).sum(axis=1, dtype=np.int64)
