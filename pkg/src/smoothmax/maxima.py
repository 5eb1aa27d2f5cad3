"""Maximal (Pareto / skyline) points of planar point sets.

A point u is dominated by v when v differs from u and ``u.x <= v.x`` and
``u.y <= v.y``.  Two points with identical coordinates are the same point
in that sense, so copies of a maximal point are all kept.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.utils import check_array


@dataclass
class MaximaResult:
    maxima: np.ndarray  # (k, 2), sorted by descending x
    indices: np.ndarray = field(repr=False)  # positions in the input
    count: int = 0

    def __len__(self):
        return self.count

    def as_set(self) -> set[tuple[float, float]]:
        return {(float(x), float(y)) for x, y in self.maxima}


def _points(points) -> np.ndarray:
    pts = check_array(points, dtype=np.float64, ensure_min_samples=1)
    if pts.shape[1] != 2:
        raise ValueError(f"expected points with 2 coordinates, got shape {pts.shape}")
    return pts


def maximal_mask(points) -> np.ndarray:
    """Boolean mask of the maximal points, via one sort and a sweep."""
    pts = _points(points)
    x, y = pts[:, 0], pts[:, 1]
    order = np.lexsort((-y, -x))
    xs, ys = x[order], y[order]
    n = len(xs)
    idx = np.arange(n)
    new_group = np.ones(n, dtype=bool)
    new_group[1:] = xs[1:] != xs[:-1]
    start = np.maximum.accumulate(np.where(new_group, idx, 0))
    # best y among points with strictly larger x
    prev = np.empty(n)
    prev[0] = -np.inf
    prev[1:] = np.maximum.accumulate(ys)[:-1]
    keep = (ys == ys[start]) & (ys > prev[start])
    mask = np.zeros(n, dtype=bool)
    mask[order[keep]] = True
    return mask


def _result(pts: np.ndarray, mask: np.ndarray) -> MaximaResult:
    ind = np.flatnonzero(mask)
    ind = ind[np.lexsort((-pts[ind, 1], -pts[ind, 0]))]
    return MaximaResult(maxima=pts[ind], indices=ind, count=len(ind))


def maximal_points(points) -> MaximaResult:
    pts = _points(points)
    return _result(pts, maximal_mask(pts))


def maximal_points_bruteforce(points) -> MaximaResult:
    """All-pairs dominance check, O(n²); meant as a test oracle."""
    pts = _points(points)
    x, y = pts[:, 0], pts[:, 1]
    ge = (x[None, :] >= x[:, None]) & (y[None, :] >= y[:, None])
    differs = (x[None, :] != x[:, None]) | (y[None, :] != y[:, None])
    dominated = (ge & differs).any(axis=1)
    return _result(pts, ~dominated)


def count_maxima(points) -> int:
    return int(maximal_mask(points).sum())


def count_maxima_batch(batch) -> np.ndarray:
    """Maxima counts for a stack of point sets of shape ``(R, n, 2)``.

    Rows whose x-coordinates contain ties fall back to :func:`count_maxima`.
    """
    b = np.asarray(batch, dtype=float)
    if b.ndim != 3 or b.shape[2] != 2:
        raise ValueError("expected an array of shape (R, n, 2)")
    x, y = b[..., 0], b[..., 1]
    order = np.argsort(-x, axis=1, kind="stable")
    xs = np.take_along_axis(x, order, axis=1)
    ys = np.take_along_axis(y, order, axis=1)
    prev = np.maximum.accumulate(ys, axis=1)
    counts = 1 + (ys[:, 1:] > prev[:, :-1]).sum(axis=1)
    ties = (xs[:, 1:] == xs[:, :-1]).any(axis=1)
    for r in np.flatnonzero(ties):
        counts[r] = count_maxima(b[r])
    return counts
