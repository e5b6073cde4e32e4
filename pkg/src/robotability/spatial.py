"""Spatial queries over point sets.

Thin wrapper around a k-d tree that pins down the query contract: exact
results (identical to a brute-force scan), nearest ties broken by lowest
point id, radius searches inclusive of the boundary and returned sorted by
point id. Bulk variants serve the data-parallel extraction stage; `workers`
only parallelizes tree traversal and never changes results.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from .errors import ValidationError


class SpatialIndex:
    """Immutable index over an (n, 2) coordinate array; row index is the point id."""

    def __init__(self, xy: np.ndarray):
        xy = np.asarray(xy, dtype=float)
        if xy.ndim != 2 or xy.shape[1] != 2 or len(xy) == 0:
            raise ValidationError("spatial index needs a non-empty (n, 2) coordinate array")
        self.xy = xy
        self._tree = cKDTree(xy)

    def __len__(self) -> int:
        return len(self.xy)

    def nearest(self, query) -> int:
        """Id of the closest point; exact distance ties go to the lowest id."""
        q = np.asarray(query, dtype=float)
        if len(self.xy) == 1:
            return 0
        d, i = self._tree.query(q, k=2)
        if d[1] > d[0]:
            return int(i[0])
        # tie at the minimum distance: collect everything at that radius
        candidates = self._tree.query_ball_point(q, r=float(d[0]))
        return int(min(candidates))

    def within(self, query, radius: float) -> np.ndarray:
        """Ids of all points with distance <= radius, ascending."""
        if radius < 0:
            raise ValidationError(f"radius must be non-negative, got {radius}")
        q = np.asarray(query, dtype=float)
        ids = self._tree.query_ball_point(q, r=float(radius))
        return np.sort(np.array(ids, dtype=np.int64))

    def nearest_bulk(self, queries: np.ndarray, workers: int = 1) -> np.ndarray:
        """Vectorized nearest ids with the same tie-break as `nearest`."""
        queries = np.asarray(queries, dtype=float).reshape(-1, 2)
        if len(self.xy) == 1:
            return np.zeros(len(queries), dtype=np.int64)
        d, i = self._tree.query(queries, k=2, workers=workers)
        out = i[:, 0].astype(np.int64)
        ties = d[:, 1] == d[:, 0]
        for row in np.nonzero(ties)[0]:
            out[row] = min(self._tree.query_ball_point(queries[row], r=float(d[row, 0])))
        return out

    def within_bulk(self, queries: np.ndarray, radius: float, workers: int = 1) -> list:
        """One id list per query row (unsorted); boundary inclusive."""
        if radius < 0:
            raise ValidationError(f"radius must be non-negative, got {radius}")
        queries = np.asarray(queries, dtype=float).reshape(-1, 2)
        return self._tree.query_ball_point(queries, r=float(radius), workers=workers)

    def knn_within(
        self, queries: np.ndarray, k: int, max_distance: float, workers: int = 1
    ) -> tuple[np.ndarray, np.ndarray]:
        """Up to k nearest neighbors within max_distance for each query row.

        Returns (distances, ids), both (m, k), padded with inf / -1 where a
        query has fewer than k neighbors in range. A query point that is
        itself a member of the indexed set must be excluded by the caller
        (pass k+1 and drop the zero-distance self match).
        """
        if k < 1:
            raise ValidationError(f"k must be >= 1, got {k}")
        if max_distance <= 0:
            raise ValidationError(f"max distance must be positive, got {max_distance}")
        queries = np.asarray(queries, dtype=float).reshape(-1, 2)
        k_eff = min(k, len(self.xy))
        # the tree's bound is exclusive; the contract is d <= max_distance
        bound = np.nextafter(float(max_distance), np.inf)
        d, i = self._tree.query(
            queries, k=k_eff, distance_upper_bound=bound, workers=workers
        )
        if k_eff == 1:
            d = d.reshape(-1, 1)
            i = i.reshape(-1, 1)
        missing = ~np.isfinite(d)
        ids = i.astype(np.int64)
        ids[missing] = -1
        if k_eff < k:
            pad_d = np.full((len(queries), k - k_eff), np.inf)
            pad_i = np.full((len(queries), k - k_eff), -1, dtype=np.int64)
            d = np.hstack([d, pad_d])
            ids = np.hstack([ids, pad_i])
        return d, ids
