import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from src.core.geometry import crop
from src.models.errors import ValidationError, WindowTooSmallError
from src.models.geometry import Box, ball_volume
from src.models.pointset import PointSet
from src.patchstat.patches import patch_count

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EntropyCurve:
    """
    log(card p(n)) / |B_n| over increasing radii

    The limsup is approximated by the maximum over the last third of the
    radii; finite data never determines the true limit.
    """
    radii: List[float]
    counts: List[int]
    values: List[float]
    tail_estimate: float
    method: str = "max over the last third of radii"

    def to_rows(self) -> List[Dict[str, Any]]:
        return [{"n": n, "count": c, "value": v} for n, c, v in zip(self.radii, self.counts, self.values)]


def _check_radii(radii: Sequence[float]) -> List[float]:
    radii = [float(n) for n in radii]
    if len(radii) < 3:
        raise ValidationError("need at least 3 radii")
    if any(b <= a for a, b in zip(radii, radii[1:])) or radii[0] <= 0:
        raise ValidationError("radii must be positive and strictly increasing")
    return radii


def entropy_estimate(ps: PointSet, radii: Sequence[float], threads: Optional[int] = None) -> EntropyCurve:
    """
    Finite-sample patch counting entropy curve

    Args:
        ps: Point set
        radii: At least three increasing radii, all admissible for the window
        threads: Worker threads for patch extraction

    Returns:
        EntropyCurve with the tail estimate
    """
    radii = _check_radii(radii)
    counts, values = [], []
    for n in radii:
        count = patch_count(ps, n, threads)
        if count == 0:
            raise WindowTooSmallError(f"no admissible patch centre at radius {n}")
        counts.append(count)
        values.append(math.log(count) / ball_volume(n, ps.dimension))
    tail = values[-max(1, len(values) // 3):]
    curve = EntropyCurve(radii=radii, counts=counts, values=values, tail_estimate=max(tail))
    logger.info("entropy curve", extra={"radii": len(radii), "tail_estimate": curve.tail_estimate})
    return curve


def linear_complexity_ratio(ps: PointSet, radii: Sequence[float], threads: Optional[int] = None) -> List[float]:
    """
    card p(D) / |B_D| per radius; bounded above and below for linearly repetitive sets
    """
    return [patch_count(ps, D, threads) / ball_volume(D, ps.dimension) for D in radii]


def cropped_patch_counts(ps: PointSet, D: float, boxes: Sequence[Box], threads: Optional[int] = None) -> List[int]:
    """
    Patch counts of the sample cropped to each box

    A crop can only lose patches, so every count is at most the count of
    the full sample.
    """
    return [patch_count(crop(ps, box), D, threads) for box in boxes]


def fit_log_growth(radii: Sequence[float], counts: Sequence[int]) -> Dict[str, float]:
    """
    Least-squares fit count ~ C * log(D) + b, used for slowly growing samples
    """
    x = np.log(np.asarray(radii, dtype=float))
    A = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(A, np.asarray(counts, dtype=float), rcond=None)
    return {"C": float(slope), "intercept": float(intercept)}
