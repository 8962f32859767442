"""Exact interval arithmetic on sets of half-open time spans.

A span set is an ``(n, 2)`` float array of ``[start, end)`` rows. All
functions return normalised sets: sorted, disjoint, non-empty rows, with
spans closer than ``EPS`` fused together.
"""

from __future__ import annotations

import numpy as np

EPS = 1e-9


def as_spans(spans) -> np.ndarray:
    arr = np.asarray(spans, dtype=np.float64)
    if arr.size == 0:
        return np.zeros((0, 2))
    return arr.reshape(-1, 2)


def union(spans) -> np.ndarray:
    arr = as_spans(spans)
    arr = arr[arr[:, 1] - arr[:, 0] > EPS]
    if len(arr) == 0:
        return np.zeros((0, 2))
    arr = arr[np.argsort(arr[:, 0], kind="stable")]
    out = [list(arr[0])]
    for start, end in arr[1:]:
        if start <= out[-1][1] + EPS:
            out[-1][1] = max(out[-1][1], end)
        else:
            out.append([start, end])
    return np.array(out)


def total(spans) -> float:
    arr = as_spans(spans)
    return float(np.sum(arr[:, 1] - arr[:, 0])) if len(arr) else 0.0


def intersect(a, b) -> np.ndarray:
    a, b = union(a), union(b)
    out = []
    i = j = 0
    while i < len(a) and j < len(b):
        lo = max(a[i, 0], b[j, 0])
        hi = min(a[i, 1], b[j, 1])
        if hi - lo > EPS:
            out.append((lo, hi))
        if a[i, 1] < b[j, 1]:
            i += 1
        else:
            j += 1
    return union(out)


def complement(spans, lo: float, hi: float) -> np.ndarray:
    """``[lo, hi)`` minus ``spans``."""
    arr = intersect(spans, [(lo, hi)]) if hi > lo else np.zeros((0, 2))
    edges = np.concatenate([[lo], arr.reshape(-1), [hi]])
    return union(edges.reshape(-1, 2))


def subtract(a, b) -> np.ndarray:
    a = union(a)
    if len(a) == 0:
        return a
    lo, hi = a[0, 0], a[-1, 1]
    return intersect(a, complement(b, lo, hi))


def coverage_count(spans_per_item, edges: np.ndarray) -> np.ndarray:
    """Active-item count on each elementary piece ``[edges[i], edges[i+1])``.

    ``edges`` must contain every span endpoint, so each piece is either
    fully inside or fully outside every span.
    """
    mids = 0.5 * (edges[:-1] + edges[1:])
    counts = np.zeros(len(mids), dtype=np.int64)
    for spans in spans_per_item:
        counts += active_mask(spans, mids)
    return counts


def active_mask(spans, points: np.ndarray) -> np.ndarray:
    """Boolean mask of ``points`` falling inside a normalised span set."""
    arr = union(spans)
    if len(arr) == 0:
        return np.zeros(len(points), dtype=bool)
    idx = np.searchsorted(arr[:, 0], points, side="right") - 1
    ok = idx >= 0
    inside = np.zeros(len(points), dtype=bool)
    inside[ok] = points[ok] < arr[idx[ok], 1]
    return inside
