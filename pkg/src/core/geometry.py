import logging
import math
from dataclasses import replace
from typing import Sequence

import numpy as np
from scipy.spatial import QhullError, Voronoi

from src.config.config import Config
from src.models.errors import PointSetError, WindowError, WindowTooSmallError
from src.models.geometry import Box, DeloneReport
from src.models.pointset import PointSet
from src.utils.index_manager import SpatialIndex, index_manager

logger = logging.getLogger(__name__)


def build_index(ps: PointSet) -> SpatialIndex:
    """
    Spatial index of a point set (cached per instance)
    """
    return index_manager.get_or_create_index(ps)


def _min_gap(ps: PointSet) -> float:
    if len(ps) < 2:
        return math.inf
    index = build_index(ps)
    distances, _ = index.tree.query(ps.points, k=2)
    return float(np.min(distances[:, 1]))


def _holes_1d(xs: np.ndarray, lo: float, hi: float):
    # Distance to the nearest point is piecewise linear, so its maximum over
    # [lo, hi] sits at an endpoint or at a midpoint between neighbours.
    xs = np.sort(xs)
    mids = 0.5 * (xs[1:] + xs[:-1])
    candidates = np.concatenate(([lo, hi], mids[(mids >= lo) & (mids <= hi)]))
    pos = np.searchsorted(xs, candidates)
    left = np.abs(candidates - xs[np.clip(pos - 1, 0, len(xs) - 1)])
    right = np.abs(xs[np.clip(pos, 0, len(xs) - 1)] - candidates)
    dist = np.minimum(left, right)
    best = int(np.argmax(dist))
    return float(dist[best]), (float(candidates[best]),)


def _local_voronoi_vertices(ps: PointSet, index: SpatialIndex, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    # vertices of the Voronoi diagram of the points near one tile; any of
    # them is a valid hole candidate since distances use the full index
    center = 0.5 * (lo + hi)
    reach = 0.5 * float(np.hypot(*(hi - lo))) + 2.0 * ps.covering_radius
    _, rows = index.ball_candidates(center[None, :], reach)
    if len(rows) < 4:
        return np.empty((0, 2))
    try:
        vertices = Voronoi(ps.points[rows]).vertices
    except QhullError:
        logger.debug("voronoi candidates unavailable (degenerate input)")
        return np.empty((0, 2))
    return vertices[np.all((vertices >= lo) & (vertices <= hi), axis=1)]


def _holes_2d(ps: PointSet, eroded: Box, first_hole: bool):
    step = ps.packing_radius / 2.0
    xs, ys = (np.linspace(lo, hi, max(2, int(math.ceil((hi - lo) / step)) + 1)) for lo, hi in eroded.bounds)
    tile = Config.get_geometry_config()["hole_tile"]
    threshold = ps.covering_radius + Config.get_geometry_config()["window_tolerance"]
    index = build_index(ps)
    best, where = -1.0, None
    # the grid is walked tile by tile so memory stays bounded by one tile
    for i in range(0, len(xs), tile):
        for j in range(0, len(ys), tile):
            tx, ty = xs[i:i + tile], ys[j:j + tile]
            gx, gy = np.meshgrid(tx, ty, indexing="ij")
            # vertex search reaches the next tile's first grid line so no strip is skipped
            lo = np.array([tx[0], ty[0]])
            hi = np.array([xs[min(i + tile, len(xs) - 1)], ys[min(j + tile, len(ys) - 1)]])
            candidates = np.vstack([np.column_stack([gx.ravel(), gy.ravel()]), _local_voronoi_vertices(ps, index, lo, hi)])
            dist = index.nearest_distance(candidates)
            k = int(np.argmax(dist))
            if dist[k] > best:
                best, where = float(dist[k]), tuple(float(v) for v in candidates[k])
            if first_hole and best > threshold:
                return best, where, False
    return best, where, True


def verify_delone(ps: PointSet, first_hole: bool = False) -> DeloneReport:
    """
    Check uniform discreteness and relative denseness of a sample

    The denseness test in 2-D is one-sided: a grid of step r/2 plus Voronoi
    vertices may miss holes smaller than the grid, but never reports a hole
    that is not there. In 1-D the gap scan is exact.

    Args:
        ps: Nonempty point set
        first_hole: Stop the 2-D search at the first hole larger than R;
            max_hole is then only a lower bound (`exhaustive` is False)

    Returns:
        DeloneReport with the measured minimal gap and largest hole
    """
    if len(ps) == 0:
        raise PointSetError("point set is empty")
    tol = Config.get_geometry_config()["window_tolerance"]
    min_gap = _min_gap(ps)
    eroded = ps.window.erode(ps.covering_radius)
    if eroded is None:
        raise WindowTooSmallError("window too small to test denseness")

    exhaustive = True
    if ps.dimension == 1:
        (lo, hi), = eroded.bounds
        max_hole, where = _holes_1d(ps.points[:, 0], lo, hi)
    else:
        max_hole, where, exhaustive = _holes_2d(ps, eroded, first_hole)

    report = DeloneReport(
        uniformly_discrete=bool(min_gap >= 2 * ps.packing_radius - tol),
        relatively_dense=bool(max_hole <= ps.covering_radius + tol),
        min_gap=min_gap,
        max_hole=max_hole,
        hole_center=where,
        exhaustive=exhaustive,
    )
    logger.info("delone check", extra={"min_gap": min_gap, "max_hole": max_hole, "n_points": len(ps)})
    return report


def crop(ps: PointSet, box: Box) -> PointSet:
    """
    Sub-sample inside `box`, which becomes the new window

    Args:
        ps: Point set
        box: Box inside ps.window

    Returns:
        Cropped point set; provenance records the crop
    """
    tol = Config.get_geometry_config()["window_tolerance"]
    if box.dimension != ps.dimension:
        raise WindowError("crop box dimension does not match the point set")
    if not ps.window.contains_box(box, tol):
        raise WindowError("crop box exceeds the sample window (completeness would be violated)")
    keep = np.nonzero(box.contains(ps.points, 1e-12))[0]
    provenance = dict(ps.provenance)
    provenance["crops"] = list(ps.provenance.get("crops", [])) + [box.to_text()]
    return ps.subset(keep, box, provenance)


def translate(ps: PointSet, x: Sequence[float]) -> PointSet:
    """
    Apply the translation action: every point p becomes -x + p

    Args:
        ps: Point set
        x: Translation vector

    Returns:
        Translated point set with window, weights and colours carried along
    """
    x = np.asarray(x, dtype=float).reshape(ps.dimension)
    provenance = dict(ps.provenance)
    provenance["translations"] = list(ps.provenance.get("translations", [])) + [[float(v) for v in x]]
    if ps.has_module_coords:
        offset = ps.offset - x
        points = offset + ps.module_coords @ ps.basis
        return replace(ps, points=points, offset=offset, window=ps.window.shift(-x), provenance=provenance)
    return replace(ps, points=ps.points - x, window=ps.window.shift(-x), provenance=provenance)
