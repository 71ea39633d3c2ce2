import itertools
import logging
import weakref
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from src.models.geometry import BallQuery
from src.models.pointset import PointSet

logger = logging.getLogger(__name__)


def linear_scan(points: np.ndarray, query: BallQuery) -> np.ndarray:
    """
    Reference answer for a closed-ball query

    Args:
        points: (n, d) coordinate array
        query: Ball to search

    Returns:
        Sorted indices of the points with squared distance <= radius^2
    """
    center = np.asarray(query.center, dtype=float)
    diff = points - center
    d2 = np.einsum("ij,ij->i", diff, diff)
    return np.nonzero(d2 <= query.radius * query.radius)[0]


class SpatialIndex:
    """
    Fixed-radius neighbour search over one point set

    Candidates come from a k-d tree with a slightly inflated radius and are
    then filtered with the same predicate as `linear_scan`, so both give
    identical answers.
    """

    def __init__(self, points: np.ndarray):
        self.points = np.asarray(points, dtype=float)
        self.tree = cKDTree(self.points) if len(self.points) else None

    def _filter(self, center: np.ndarray, radius: float, candidates) -> np.ndarray:
        if not len(candidates):
            return np.empty(0, dtype=np.int64)
        candidates = np.asarray(candidates, dtype=np.int64)
        diff = self.points[candidates] - center
        d2 = np.einsum("ij,ij->i", diff, diff)
        return np.sort(candidates[d2 <= radius * radius])

    @staticmethod
    def _slack(radius: float) -> float:
        return radius * (1.0 + 1e-9) + 1e-12

    def points_in_ball(self, query: BallQuery) -> np.ndarray:
        """
        Indices of the points inside a closed ball

        Args:
            query: Ball to search

        Returns:
            Sorted index array
        """
        if self.tree is None:
            return np.empty(0, dtype=np.int64)
        center = np.asarray(query.center, dtype=float)
        candidates = self.tree.query_ball_point(center, self._slack(query.radius))
        return self._filter(center, query.radius, candidates)

    def neighbourhoods(self, centers: np.ndarray, radius: float) -> list:
        """
        Batched ball queries sharing one radius

        Args:
            centers: (m, d) array of ball centres
            radius: Common radius

        Returns:
            List of sorted index arrays, one per centre
        """
        centers = np.asarray(centers, dtype=float).reshape(-1, self.points.shape[1])
        if self.tree is None:
            return [np.empty(0, dtype=np.int64) for _ in range(len(centers))]
        raw = self.tree.query_ball_point(centers, self._slack(radius))
        return [self._filter(c, radius, cand) for c, cand in zip(centers, raw)]

    def ball_candidates(self, centers: np.ndarray, radius: float):
        """
        Unfiltered neighbour candidates of many centres, flattened

        Args:
            centers: (m, d) array of ball centres
            radius: Common radius (inflated by the index slack)

        Returns:
            (owner, neighbour) index arrays; owner indexes `centers`
        """
        centers = np.asarray(centers, dtype=float).reshape(-1, self.points.shape[1])
        if self.tree is None or not len(centers):
            empty = np.empty(0, dtype=np.int64)
            return empty, empty
        raw = self.tree.query_ball_point(centers, self._slack(radius))
        lengths = np.fromiter((len(c) for c in raw), dtype=np.int64, count=len(raw))
        neighbours = np.fromiter(itertools.chain.from_iterable(raw), dtype=np.int64, count=int(lengths.sum()))
        owner = np.repeat(np.arange(len(centers), dtype=np.int64), lengths)
        return owner, neighbours

    def nearest_distance(self, targets: np.ndarray) -> np.ndarray:
        """
        Distance from each target to its nearest indexed point
        """
        if self.tree is None:
            return np.full(len(targets), np.inf)
        distances, _ = self.tree.query(np.asarray(targets, dtype=float))
        return np.asarray(distances, dtype=float)


class IndexManager:
    def __init__(self):
        """
        Initialize the index manager which caches one spatial index per point set
        """
        self.indices: "weakref.WeakKeyDictionary[PointSet, SpatialIndex]" = weakref.WeakKeyDictionary()

    def get_or_create_index(self, ps: PointSet, force_refresh: bool = False) -> SpatialIndex:
        """
        Get or create the spatial index of a point set

        Args:
            ps: Point set to index
            force_refresh: Whether to rebuild even when cached

        Returns:
            SpatialIndex over ps.points
        """
        # Point sets are immutable, so a cached index never goes stale
        index: Optional[SpatialIndex] = None if force_refresh else self.indices.get(ps)
        if index is None:
            index = SpatialIndex(ps.points)
            self.indices[ps] = index
            logger.debug("built spatial index", extra={"n_points": len(ps)})
        return index


index_manager = IndexManager()
