import logging
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from src.config.config import Config
from src.core.geometry import build_index
from src.hullmetric.metric import CAP, hull_metric, separated
from src.hullmetric.separation import covering_number, hull_sample, separated_set
from src.models.errors import PreconditionError, WindowTooSmallError
from src.models.geometry import BallQuery, Box
from src.models.pointset import PointSet
from src.patchstat.patches import extract_patches, patch_count

logger = logging.getLogger(__name__)

PASS, FAIL, NOT_GUARANTEED = "pass", "fail", "not guaranteed"


def epsilon0(r: float, R: float) -> float:
    """
    min{1/sqrt(2), r/2, 1/(2R)}
    """
    if not 0 < r <= R:
        raise PreconditionError("radii must satisfy 0 < r <= R")
    return min(CAP, r / 2.0, 1.0 / (2.0 * R))


def rho(D: float, R: float, eps: float) -> float:
    """
    D + R + eps + 1/eps
    """
    if not eps > 0:
        raise PreconditionError("eps must be positive")
    return D + R + eps + 1.0 / eps


def _local_set(ps: PointSet, radius: float) -> np.ndarray:
    rows = build_index(ps).points_in_ball(BallQuery(tuple(np.zeros(ps.dimension)), radius))
    points = ps.points[rows]
    return points[np.lexsort(points.T[::-1])]


def check_lemma_geometry(xi1: PointSet, xi2: PointSet, S: float, resolution: Optional[float] = None) -> Dict[str, Any]:
    """
    Two sets sharing the origin but differing on B_S are at least
    min{1/sqrt(2), r/2, 1/S} apart

    Returns:
        {"d_lower_bound", "d_lower", "d_upper", "holds"}
    """
    resolution = resolution or Config.get_metric_config()["resolution"]
    tol = Config.get_geometry_config()["window_tolerance"]
    for name, ps in (("xi1", xi1), ("xi2", xi2)):
        if not len(_local_set(ps, tol)):
            raise PreconditionError(f"origin is not a point of {name}")
    if abs(xi1.packing_radius - xi2.packing_radius) > 1e-12:
        raise PreconditionError("xi1 and xi2 must share the packing radius r")
    a, b = _local_set(xi1, S), _local_set(xi2, S)
    if a.shape == b.shape and np.allclose(a, b, atol=tol, rtol=0.0):
        raise PreconditionError("xi1∩B_S ≠ xi2∩B_S fails: the sets agree on B_S")

    bound = min(CAP, xi1.packing_radius / 2.0, 1.0 / S)
    bracket = hull_metric(xi1, xi2, resolution)
    result = {
        "S": S,
        "d_lower_bound": bound,
        "d_lower": bracket.lower,
        "d_upper": bracket.upper,
        "holds": bool(bracket.lower >= bound - resolution),
    }
    logger.info("lemma geometry check", extra=result)
    return result


@dataclass
class TheoremRecord:
    D: float
    eps: float
    eps0: float
    N_hat: int
    patch_count_D: int
    M_eps: int
    patch_count_rhoD: int
    separation_check: str
    covering_check: str
    representatives: int


def _representative_offsets(ps: PointSet, D: float, half_width: float) -> List[np.ndarray]:
    """
    For every D-patch, the occurrence closest to the window centre whose
    half_width cube fits in the window
    """
    table = extract_patches(ps, D)
    centre = ps.window.center
    offsets = []
    for label in range(len(table)):
        rows = table.occurrences(label)
        points = ps.points[rows]
        order = np.argsort(np.linalg.norm(points - centre, axis=1), kind="stable")
        for x in points[order]:
            if ps.window.contains_box(Box.cube(half_width, ps.dimension, x)):
                offsets.append(x)
                break
        else:
            raise WindowTooSmallError(f"window too small to host a representative of every {D}-patch")
    return offsets


def check_htop_equals_hpc(
    ps: PointSet,
    D_list: Sequence[float],
    eps: float,
    resolution: Optional[float] = None,
    extra_translates: int = 8,
    seed: Optional[int] = None,
) -> List[Dict[str, Any]]:
    """
    Finite-scale check of both inequalities between separated-set counts
    and patch counts

    For each D: (i) translates representing every D-patch at the origin
    are pairwise at d_D distance at least eps0 (only when eps < eps0), and
    (ii) a greedy (D, eps)-separated subset of representatives plus seeded
    extra translates has at most M(eps) * card p(rho(D)) elements.

    Returns:
        One record per D
    """
    config = Config.get_metric_config()
    resolution = resolution or config["resolution"]
    seed = Config.get_runtime_config()["seed"] if seed is None else seed
    eps0 = epsilon0(ps.packing_radius, ps.covering_radius)
    if not eps > 0:
        raise PreconditionError("eps must be positive")
    rng = np.random.default_rng(seed)
    M = covering_number(eps, ps.covering_radius, ps.dimension)

    records = []
    for D in D_list:
        half_width = D + 2.0 / eps0 + 2.0
        offsets = _representative_offsets(ps, D, half_width)
        reach = ps.window.erode(half_width)
        if reach is None:
            raise WindowTooSmallError("window too small for rho(D)")
        extra = reach.lower + rng.random((extra_translates, ps.dimension)) * reach.extents
        hs = hull_sample(ps, offsets + list(extra), half_width)
        reps = hs.elements[: len(offsets)]

        if eps < eps0:
            threshold = eps0 - resolution
            ok = all(
                separated(reps[i], reps[j], D, threshold, resolution)
                for i in range(len(reps))
                for j in range(i + 1, len(reps))
            )
            separation_check = PASS if ok else FAIL
        else:
            separation_check = NOT_GUARANTEED

        n_hat = separated_set(hs, D, eps, resolution, exact=False).N_hat
        count_rho = patch_count(ps, rho(D, ps.covering_radius, eps))
        record = TheoremRecord(
            D=float(D),
            eps=eps,
            eps0=eps0,
            N_hat=n_hat,
            patch_count_D=len(offsets),
            M_eps=M,
            patch_count_rhoD=count_rho,
            separation_check=separation_check,
            covering_check=PASS if n_hat <= M * count_rho else FAIL,
            representatives=len(reps),
        )
        logger.info("theorem check", extra=asdict(record))
        records.append(asdict(record))
    return records
