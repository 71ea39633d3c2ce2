import itertools
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from src.config.config import Config
from src.models.errors import WindowError, WindowTooSmallError
from src.models.geometry import Box
from src.models.pointset import PointSet
from src.patchstat.patches import extract_patches

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FrequencyReport:
    """
    Relative patch frequencies per anchor box

    A small `max_total_variation` supports uniform cluster frequencies and a
    large one refutes them; neither is a proof.
    """
    D: float
    frequencies: List[Dict[str, float]]
    n_centers: List[int]
    max_total_variation: float


def total_variation(p: Dict[str, float], q: Dict[str, float]) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


def patch_frequencies(ps: PointSet, D: float, anchor_boxes: Sequence[Box], threads: Optional[int] = None) -> FrequencyReport:
    """
    Frequencies of D-patches among the centres x with B_D(x) inside each anchor

    Args:
        ps: Point set
        D: Patch radius
        anchor_boxes: Boxes inside the sample window

    Returns:
        FrequencyReport with the largest pairwise total-variation distance
    """
    tol = Config.get_geometry_config()["window_tolerance"]
    table = extract_patches(ps, D, threads)
    keys = [k.hex() for k in table.keys()]
    centers = ps.points[table.center_indices]

    frequencies, n_centers = [], []
    for i, box in enumerate(anchor_boxes):
        if not ps.window.contains_box(box, tol):
            raise WindowError(f"anchor {i} exceeds the sample window")
        eroded = box.erode(D)
        inside = eroded.contains(centers, 1e-12) if eroded is not None else np.zeros(len(centers), dtype=bool)
        if not inside.any():
            raise WindowTooSmallError(f"anchor {i} has no admissible centre")
        counts = np.bincount(table.center_labels[inside], minlength=len(keys))
        total = int(counts.sum())
        frequencies.append({keys[j]: counts[j] / total for j in np.nonzero(counts)[0]})
        n_centers.append(total)

    tv = max((total_variation(p, q) for p, q in itertools.combinations(frequencies, 2)), default=0.0)
    logger.info("patch frequencies", extra={"D": D, "anchors": len(anchor_boxes), "max_total_variation": tv})
    return FrequencyReport(D=D, frequencies=frequencies, n_centers=n_centers, max_total_variation=tv)


def disjoint_anchors(window: Box, count: int, length: float) -> List[Box]:
    """
    `count` equal boxes of side `length` laid along the first axis of the window
    """
    lo = window.lower
    boxes = []
    for i in range(count):
        start = lo[0] + i * length
        bounds = [(start, start + length)] + [tuple(b) for b in window.bounds[1:]]
        boxes.append(Box(tuple(bounds)))
    return boxes
