import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np
from scipy.spatial import cKDTree

from src.config.config import Config
from src.core.geometry import build_index
from src.models.errors import WindowTooSmallError
from src.models.geometry import ball_volume
from src.models.pointset import PointSet
from src.patchstat.patches import PatchTable, extract_patches

logger = logging.getLogger(__name__)

EXACT_IN_WINDOW = "exact-in-window"
LOWER_BOUND = "lower-bound"


@dataclass(frozen=True)
class RepetitivityEstimate:
    D: float
    F_hat: float
    anchors_tested: int
    status: str
    n_patches: int

    def to_dict(self) -> Dict[str, Any]:
        return {"D": self.D, "F_hat": self.F_hat, "anchors_tested": self.anchors_tested, "status": self.status, "n_patches": self.n_patches}


def _anchors(ps: PointSet, table: PatchTable, n_anchors: int) -> np.ndarray:
    # anchors come from the central half of the window, evenly spread
    central = ps.window.erode(float(ps.window.extents.min()) / 4.0)
    centers = table.center_indices
    if central is not None:
        centers = centers[central.contains(ps.points[centers])]
    if len(centers) <= n_anchors:
        return centers
    picks = np.unique(np.linspace(0, len(centers) - 1, n_anchors).round().astype(np.int64))
    return centers[picks]


def repetitivity_estimate(ps: PointSet, D: float, n_anchors: Optional[int] = None, threads: Optional[int] = None) -> RepetitivityEstimate:
    """
    Smallest F such that every D-patch of the sample occurs within distance
    F of every tested anchor point (at least 1)

    The estimate is exact for the sample when each anchor's F-ball lies in
    the window eroded by D and every patch recurs; otherwise a closer
    occurrence may exist outside the window, and the status says so.

    Args:
        ps: Point set
        D: Patch radius, at least 1
        n_anchors: Number of anchors (config default)
        threads: Worker threads for patch extraction

    Returns:
        RepetitivityEstimate
    """
    config = Config.get_patch_config()
    n_anchors = n_anchors or config["repetitivity_anchors"]
    table = extract_patches(ps, D, threads)
    anchors = _anchors(ps, table, n_anchors)
    if len(anchors) < config["min_anchors"]:
        raise WindowTooSmallError("window too small for F(D)")

    anchor_points = ps.points[anchors]
    reach = np.zeros(len(anchors))
    recurrent = True
    for label in range(len(table)):
        occurrences = ps.points[table.occurrences(label)]
        recurrent &= len(occurrences) > 1
        distances, _ = cKDTree(occurrences).query(anchor_points)
        reach = np.maximum(reach, distances)

    F_hat = max(1.0, float(reach.max()))
    inner = ps.window.erode(D)
    exact = recurrent and inner is not None and all(inner.inner_radius(x) >= F_hat for x in anchor_points)
    estimate = RepetitivityEstimate(
        D=float(D),
        F_hat=F_hat,
        anchors_tested=len(anchors),
        status=EXACT_IN_WINDOW if exact else LOWER_BOUND,
        n_patches=len(table),
    )
    logger.info("repetitivity estimate", extra=estimate.to_dict())
    return estimate


def density_constant(ps: PointSet) -> float:
    """
    kappa_1: largest point count of a unit ball centred at a sample point, per unit volume
    """
    inner = ps.window.erode(1.0)
    rows = np.arange(len(ps)) if inner is None else np.nonzero(inner.contains(ps.points))[0]
    if not len(rows):
        rows = np.arange(len(ps))
    counts = build_index(ps).tree.query_ball_point(ps.points[rows], 1.0, return_length=True)
    return float(np.max(counts)) / ball_volume(1.0, ps.dimension)


def check_repetitivity_bound(ps: PointSet, D: float, n_anchors: Optional[int] = None, threads: Optional[int] = None) -> Dict[str, Any]:
    """
    card p(D) <= kappa_1 |B_F(D)| with F(D) replaced by its estimate

    The bound does not rely on relative denseness, so it is evaluated for
    non-Delone samples as well, with a diagnostic.
    """
    estimate = repetitivity_estimate(ps, D, n_anchors, threads)
    kappa = density_constant(ps)
    lhs = estimate.n_patches
    rhs = kappa * ball_volume(estimate.F_hat, ps.dimension)
    result = {
        "D": float(D),
        "lhs": lhs,
        "rhs": rhs,
        "kappa1": kappa,
        "F_hat": estimate.F_hat,
        "status": estimate.status,
        "holds": bool(lhs <= rhs),
    }
    if not ps.delone:
        result["diagnostic"] = "not relatively dense"
    logger.info("repetitivity bound", extra={"D": D, "lhs": lhs, "rhs": rhs})
    return result
