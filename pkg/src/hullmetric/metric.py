import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from src.config.config import Config
from src.core.geometry import build_index
from src.models.errors import PointSetError, WindowTooSmallError
from src.models.geometry import BallQuery
from src.models.pointset import PointSet

logger = logging.getLogger(__name__)

CAP = 1.0 / math.sqrt(2.0)
_MATCH_TOL = 1e-9
_DIRECTIONS = np.stack([np.cos(np.arange(16) * np.pi / 8), np.sin(np.arange(16) * np.pi / 8)], axis=1)


@dataclass(frozen=True)
class MetricBracket:
    """
    Enclosure lower <= d <= upper of a hull metric value

    `certified` is False when the sample windows were too small to decide
    agreement at the scales the bisection needed.
    """
    lower: float
    upper: float
    certified: bool = True

    def __post_init__(self):
        if not (0.0 <= self.lower <= self.upper <= CAP + 1e-12):
            raise ValueError(f"invalid metric bracket [{self.lower}, {self.upper}]")

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper)

    def to_dict(self):
        return {"lower": self.lower, "upper": self.upper, "certified": self.certified}


class _Sample:
    def __init__(self, ps: PointSet):
        self.ps = ps
        self.index = build_index(ps)
        self.colors = None if ps.colors is None else np.array(ps.colors)

    def local(self, center: np.ndarray, radius: float) -> Tuple[np.ndarray, Optional[np.ndarray]]:
        rows = self.index.points_in_ball(BallQuery(tuple(center), radius))
        colors = None if self.colors is None else self.colors[rows]
        return self.ps.points[rows] - center, colors

    def reach(self, center: np.ndarray) -> float:
        return self.ps.window.inner_radius(center)


def _smallest_decidable(reach: float) -> float:
    # S + 1/S <= reach has solutions only for reach >= 2
    if reach < 2.0:
        return math.inf
    return 0.5 * (reach - math.sqrt(reach * reach - 4.0))


def _free_point_1d(lo: float, hi: float, blocked: np.ndarray, radius: float) -> bool:
    """
    Whether [lo, hi] has a point outside every closed interval [x - radius, x + radius]
    """
    if lo > hi:
        return False
    cur, covered = lo, False
    for x in np.sort(blocked):
        a, b = x - radius, x + radius
        if b < cur:
            continue
        if a > cur:
            return not covered or cur < hi
        cur, covered = max(cur, b), True
        if cur >= hi:
            return False
    return not covered or cur < hi


def _crossings(centers: np.ndarray, radii: np.ndarray) -> np.ndarray:
    """
    Intersection points of every pair of crossing circles
    """
    i, j = np.triu_indices(len(centers), k=1)
    d = centers[j] - centers[i]
    dist = np.hypot(d[:, 0], d[:, 1])
    ok = (dist > 0) & (dist <= radii[i] + radii[j]) & (dist >= np.abs(radii[i] - radii[j]))
    i, j, d, dist = i[ok], j[ok], d[ok], dist[ok]
    along = (radii[i] ** 2 - radii[j] ** 2 + dist ** 2) / (2.0 * dist)
    height = np.sqrt(np.maximum(radii[i] ** 2 - along ** 2, 0.0))
    base = centers[i] + (along / dist)[:, None] * d
    normal = np.stack([-d[:, 1], d[:, 0]], axis=1) / dist[:, None]
    return np.vstack([base + height[:, None] * normal, base - height[:, None] * normal])


def _free_point_2d(t: np.ndarray, S: float, blocked: np.ndarray, radius: float, resolution: float) -> bool:
    """
    Search the lens B_S(0) and B_S(-t) for a point farther than radius from blocked

    A uniform step of resolution/4 would need (8S/resolution)^2 nodes, so the
    lens is covered by a grid of `grid_points_2d` nodes per axis instead.
    Free regions thinner than that grid are bounded by circle arcs. Their
    corners are crossings of two boundary circles, and a region cut off by a
    single disc contains the point of a lens circle farthest from its centre.
    These points and their 16 neighbours at distance min(resolution, S)/4 are
    tested as well.
    """
    lo = np.maximum(-S, -t - S)
    hi = np.minimum(S, -t + S)
    if np.any(lo > hi):
        return False
    if len(blocked):
        reach = np.hypot(blocked[:, 0], blocked[:, 1])
        # one disc covers B_S(0), hence the lens
        if np.any(reach + S <= radius):
            return False
        blocked = blocked[reach <= radius + S]
    step = 2.0 * S / Config.get_metric_config()["grid_points_2d"]
    axes = [np.arange(a, b + step, step) for a, b in zip(lo, hi)]
    grid = np.array(np.meshgrid(*axes, indexing="ij")).reshape(2, -1).T

    lens_centers = np.array([np.zeros(2), -t])
    circles = np.vstack([lens_centers, blocked])
    radii = np.concatenate([[S, S], np.full(len(blocked), radius)])
    away = lens_centers[:, None, :] - blocked[None, :, :]
    norms = np.linalg.norm(away, axis=2, keepdims=True)
    corners = np.vstack([
        _crossings(circles, radii),
        (lens_centers[:, None, :] + S * away / np.where(norms > 0, norms, 1.0)).reshape(-1, 2),
        (lens_centers[:, None, :] + S * _DIRECTIONS[::4][None, :, :]).reshape(-1, 2),
    ])
    near = (corners[:, None, :] + 0.25 * min(resolution, S) * _DIRECTIONS[None, :, :]).reshape(-1, 2)

    candidates = np.vstack([grid, [np.zeros(2), -t, -t / 2.0], corners, near])
    # points placed on a lens circle may round just outside it
    bound = S * S * (1.0 + 1e-12)
    in_lens = (np.einsum("ij,ij->i", candidates, candidates) <= bound) & (
        np.einsum("ij,ij->i", candidates + t, candidates + t) <= bound
    )
    candidates = candidates[in_lens]
    if not len(candidates):
        return False
    if not len(blocked):
        return True
    distances, _ = cKDTree(blocked).query(candidates)
    return bool(np.any(distances > radius))


def _free_point(t: np.ndarray, S: float, blocked: np.ndarray, radius: float, resolution: float) -> bool:
    """
    Some u with |u| <= S, |u + t| <= S and dist(u, blocked) > radius
    """
    if t.shape[0] == 1:
        return _free_point_1d(max(-S, -t[0] - S), min(S, -t[0] + S), blocked[:, 0], radius)
    return _free_point_2d(t, S, blocked, radius, resolution)


def _mismatch(pa, ca, pb, cb) -> np.ndarray:
    """
    Symmetric difference of two local configurations (colours must match)
    """
    if not len(pa) or not len(pb):
        return np.vstack([pa, pb])
    distances, nearest = cKDTree(pb).query(pa)
    matched = distances <= _MATCH_TOL
    if ca is not None or cb is not None:
        if ca is None or cb is None:
            matched[:] = False
        else:
            matched &= ca == cb[nearest]
    matched_b = np.zeros(len(pb), dtype=bool)
    matched_b[nearest[matched]] = True
    return np.vstack([pa[~matched], pb[~matched_b]])


def _shifts(pa: np.ndarray, pb: np.ndarray, S: float) -> np.ndarray:
    if not len(pa) or not len(pb):
        return np.empty((0, pa.shape[1]))
    pairs = cKDTree(pb).query_ball_point(pa, 2.0 * S)
    diffs = [pb[j] - pa[i] for i, js in enumerate(pairs) for j in js]
    if not diffs:
        return np.empty((0, pa.shape[1]))
    diffs = np.array(diffs)
    _, keep = np.unique(np.round(diffs / _MATCH_TOL).astype(np.int64), axis=0, return_index=True)
    diffs = diffs[keep]
    return diffs[np.argsort(np.einsum("ij,ij->i", diffs, diffs), kind="stable")]


def agree(a: _Sample, b: _Sample, x: np.ndarray, S: float, resolution: float) -> bool:
    """
    Whether some u, v in B_S give (-u + a) and (-v + b) equal on B_(1/S),
    both seen from the origin x

    With v = u + t the condition says that u is farther than 1/S from the
    symmetric difference of a and b - t. Nonempty clusters force t to be a
    difference q - p of points within S + 1/S of x.
    """
    radius = 1.0 / S
    pa, ca = a.local(x, S + radius)
    pb, cb = b.local(x, S + radius)
    zero = np.zeros(len(x))
    if _free_point(zero, S, pa, radius, resolution) and _free_point(zero, S, pb, radius, resolution):
        return True
    for t in _shifts(pa, pb, S):
        if _free_point(t, S, _mismatch(pa, ca, pb - t, cb), radius, resolution):
            return True
    return False


def _same_content(xi1: PointSet, xi2: PointSet) -> bool:
    return (
        xi1.window == xi2.window
        and xi1.points.shape == xi2.points.shape
        and np.array_equal(xi1.points, xi2.points)
        and xi1.colors == xi2.colors
    )


def _bisect(a: _Sample, b: _Sample, x: np.ndarray, resolution: float, strict: bool, lower: float = 0.0) -> MetricBracket:
    s_min = max(_smallest_decidable(a.reach(x)), _smallest_decidable(b.reach(x)))
    if s_min > CAP:
        if strict:
            raise WindowTooSmallError("windows too small to certify at requested resolution")
        return MetricBracket(0.0, CAP, certified=False)
    if not agree(a, b, x, CAP, resolution):
        return MetricBracket(CAP, CAP)

    lo, hi, certified = lower, CAP, True
    if lo > 0.0 and lo >= s_min and agree(a, b, x, lo, resolution):
        # this origin cannot raise the running lower bound
        return MetricBracket(0.0, lo)
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if mid < s_min:
            if strict:
                raise WindowTooSmallError("windows too small to certify at requested resolution")
            certified = False
            break
        if agree(a, b, x, mid, resolution):
            hi = mid
        else:
            lo = mid
    return MetricBracket(lo, hi, certified)


def _check_pair(xi1: PointSet, xi2: PointSet) -> None:
    if xi1.dimension != xi2.dimension:
        raise PointSetError("hull metric needs point sets of the same dimension")


def hull_metric(xi1: PointSet, xi2: PointSet, resolution: Optional[float] = None, strict: bool = True) -> MetricBracket:
    """
    Bisection enclosure of the hull metric d(xi1, xi2)

    Args:
        xi1: First point set
        xi2: Second point set
        resolution: Target bracket width (config default)
        strict: Raise instead of returning an uncertified bracket when the
            windows cannot decide agreement at the scales required

    Returns:
        MetricBracket with upper - lower <= resolution when certified
    """
    _check_pair(xi1, xi2)
    resolution = resolution or Config.get_metric_config()["resolution"]
    if _same_content(xi1, xi2):
        return MetricBracket(0.0, 0.0)
    origin = np.zeros(xi1.dimension)
    bracket = _bisect(_Sample(xi1), _Sample(xi2), origin, resolution, strict)
    logger.debug("hull metric", extra=bracket.to_dict())
    return bracket


def _orbit_candidates(a: _Sample, b: _Sample, D: float) -> np.ndarray:
    """
    Origins x in B_D to test: points where the samples differ first, then
    all sample points, then a regular grid
    """
    dim = a.ps.dimension
    zero = np.zeros(dim)
    pa, ca = a.local(zero, D)
    pb, cb = b.local(zero, D)
    differing = _mismatch(pa, ca, pb, cb)
    # a fixed step keeps the origins for radius D among those for any larger radius
    step = Config.get_metric_config()["orbit_grid_step"] * dim
    axis = step * np.arange(-math.floor(D / step), math.floor(D / step) + 1)
    if dim == 1:
        grid = axis.reshape(-1, 1)
    else:
        grid = np.array(np.meshgrid(axis, axis, indexing="ij")).reshape(2, -1).T
        grid = grid[np.einsum("ij,ij->i", grid, grid) <= D * D]
    candidates = np.vstack([zero[None, :], differing, pa, pb, grid])
    _, keep = np.unique(np.round(candidates / _MATCH_TOL).astype(np.int64), axis=0, return_index=True)
    return candidates[np.sort(keep)]


def orbit_metric(xi1: PointSet, xi2: PointSet, D: float, resolution: Optional[float] = None) -> MetricBracket:
    """
    d_D(xi1, xi2) = sup over x in B_D of d(-x + xi1, -x + xi2)

    The supremum is taken over sample points, points where the sets
    differ and a grid, then refined around the maximizer. The lower end is
    a valid lower bound; the upper end is the largest upper bracket seen.
    """
    _check_pair(xi1, xi2)
    resolution = resolution or Config.get_metric_config()["resolution"]
    if _same_content(xi1, xi2):
        return MetricBracket(0.0, 0.0)
    a, b = _Sample(xi1), _Sample(xi2)
    candidates = _orbit_candidates(a, b, D)
    best = MetricBracket(0.0, 0.0)
    best_x = candidates[0]
    certified = True

    def visit(x: np.ndarray) -> None:
        nonlocal best, best_x, certified
        if np.linalg.norm(x) > D + 1e-12:
            return
        bracket = _bisect(a, b, x, resolution, strict=False, lower=best.lower)
        certified &= bracket.certified
        if bracket.lower > best.lower:
            best, best_x = MetricBracket(bracket.lower, max(bracket.upper, best.upper)), x
        elif bracket.upper > best.upper:
            best = MetricBracket(best.lower, bracket.upper)

    for x in candidates:
        visit(x)
        if best.lower >= CAP:
            break
    if best.lower < CAP and len(candidates) > 1:
        step = Config.get_metric_config()["orbit_grid_step"] * xi1.dimension / 2.0
        offsets = np.linspace(-step, step, 9)
        if xi1.dimension == 1:
            local = best_x + offsets.reshape(-1, 1)
        else:
            local = best_x + np.array(np.meshgrid(offsets, offsets, indexing="ij")).reshape(2, -1).T
        for x in local:
            visit(x)
    return MetricBracket(best.lower, best.upper, certified)


def separated(xi1: PointSet, xi2: PointSet, D: float, threshold: float, resolution: Optional[float] = None) -> bool:
    """
    Whether d_D(xi1, xi2) >= threshold is witnessed at some tested origin

    Agreement failing at scale S means d >= S, so a single predicate
    evaluation per origin suffices.
    """
    _check_pair(xi1, xi2)
    resolution = resolution or Config.get_metric_config()["resolution"]
    if _same_content(xi1, xi2):
        return False
    a, b = _Sample(xi1), _Sample(xi2)
    if threshold > CAP:
        return False
    S = threshold
    for x in _orbit_candidates(a, b, D):
        decidable = max(_smallest_decidable(a.reach(x)), _smallest_decidable(b.reach(x)))
        if decidable > S:
            continue
        if not agree(a, b, x, S, resolution):
            return True
    return False
