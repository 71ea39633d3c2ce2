import logging
import math

import numpy as np

from src.models.errors import PointSetError
from src.models.geometry import Box
from src.models.pointset import PointSet

logger = logging.getLogger(__name__)


def _square_grid(bound: int) -> np.ndarray:
    axis = np.arange(-bound, bound + 1, dtype=np.int64)
    p, q = np.meshgrid(axis, axis, indexing="ij")
    return np.column_stack([p.ravel(), q.ravel()])


def visible_mask(coords: np.ndarray) -> np.ndarray:
    """
    True where gcd(|p|, |q|) = 1 (with gcd(0, k) = k)
    """
    return np.gcd(np.abs(coords[:, 0]), np.abs(coords[:, 1])) == 1


def visible_points(bound: int) -> PointSet:
    """
    Visible points of Z^2 in the square [-bound, bound]^2

    Uniformly discrete with r = 0.5 but not relatively dense, so the set is
    flagged non-Delone; R = 1 is the declared nominal value.

    Args:
        bound: Half side of the square, at least 1

    Returns:
        PointSet with exact module coordinates
    """
    if bound < 1:
        raise PointSetError("bound must be at least 1")
    coords = _square_grid(bound)
    coords = coords[visible_mask(coords)]
    logger.info("generated visible points", extra={"bound": bound, "n_points": len(coords)})
    return PointSet(
        points=coords.astype(float),
        packing_radius=0.5,
        covering_radius=1.0,
        window=Box.cube(float(bound), 2),
        module_coords=coords,
        basis=np.eye(2),
        delone=False,
        provenance={"generator": "visible_points", "bound": bound},
    )


def coloured_visible_points(bound: int) -> PointSet:
    """
    All of Z^2 in [-bound, bound]^2, coloured "v" (visible) or "h" (hidden)

    The two-colour version is a coloured Delone set, so every tool that
    needs relative denseness applies to it.
    """
    if bound < 1:
        raise PointSetError("bound must be at least 1")
    coords = _square_grid(bound)
    colors = tuple(np.where(visible_mask(coords), "v", "h"))
    return PointSet(
        points=coords.astype(float),
        packing_radius=0.5,
        covering_radius=math.sqrt(2.0) / 2.0,
        window=Box.cube(float(bound), 2),
        module_coords=coords,
        basis=np.eye(2),
        colors=colors,
        provenance={"generator": "coloured_visible_points", "bound": bound},
    )
