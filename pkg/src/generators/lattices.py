import logging
import math
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import Voronoi

from src.config.config import Config
from src.models.errors import PointSetError
from src.models.geometry import Box
from src.models.pointset import PointSet

logger = logging.getLogger(__name__)


def gauss_reduce(basis: np.ndarray) -> np.ndarray:
    """
    Lagrange-Gauss reduction of a 2-D lattice basis (rows are generators)
    """
    b1, b2 = np.array(basis[0], dtype=float), np.array(basis[1], dtype=float)
    if b1 @ b1 > b2 @ b2:
        b1, b2 = b2, b1
    while True:
        mu = round(float(b1 @ b2) / float(b1 @ b1))
        b2 = b2 - mu * b1
        if b2 @ b2 >= b1 @ b1:
            return np.vstack([b1, b2])
        b1, b2 = b2, b1


def lattice_radii(basis: np.ndarray) -> Tuple[float, float]:
    """
    Packing and covering radius of the lattice spanned by the rows of `basis`

    Returns:
        (r, R): half the shortest vector, and the circumradius of the
        Voronoi cell
    """
    basis = np.atleast_2d(np.asarray(basis, dtype=float))
    if basis.shape[1] == 1:
        half = abs(float(basis[0, 0])) / 2.0
        return half, half
    reduced = gauss_reduce(basis)
    r = float(np.linalg.norm(reduced[0])) / 2.0
    coeffs = np.array([(i, j) for i in range(-2, 3) for j in range(-2, 3)], dtype=float)
    points = coeffs @ reduced
    vor = Voronoi(points)
    origin = int(np.argmin(np.einsum("ij,ij->i", points, points)))
    region = vor.regions[vor.point_region[origin]]
    R = float(np.max(np.linalg.norm(vor.vertices[region], axis=1)))
    return r, R


def _coefficient_ranges(inverse: np.ndarray, window: Box) -> Sequence[np.ndarray]:
    # A linear image of a box is spanned by the images of its corners
    corners = np.array(np.meshgrid(*[list(b) for b in window.bounds], indexing="ij")).reshape(window.dimension, -1).T
    coeffs = corners @ inverse
    lo = np.floor(coeffs.min(axis=0)).astype(np.int64) - 1
    hi = np.ceil(coeffs.max(axis=0)).astype(np.int64) + 1
    return [np.arange(a, b + 1) for a, b in zip(lo, hi)]


def lattice(basis: Sequence[Sequence[float]], window: Box) -> PointSet:
    """
    All points of the lattice spanned by the rows of `basis` inside `window`

    Args:
        basis: d x d matrix, one generator per row
        window: Observation box

    Returns:
        Delone PointSet with exact module coordinates
    """
    basis = np.atleast_2d(np.asarray(basis, dtype=float))
    dim = window.dimension
    if basis.shape != (dim, dim):
        raise PointSetError(f"basis must be {dim}x{dim} for a {dim}-D window")
    scale = float(np.prod(np.linalg.norm(basis, axis=1)))
    if scale == 0.0 or abs(np.linalg.det(basis)) <= 1e-12 * scale:
        raise PointSetError("singular basis")

    ranges = _coefficient_ranges(np.linalg.inv(basis), window)
    coords = np.array(np.meshgrid(*ranges, indexing="ij")).reshape(dim, -1).T
    points = coords @ basis
    keep = window.contains(points, Config.get_geometry_config()["window_tolerance"])
    r, R = lattice_radii(basis)
    logger.info("generated lattice", extra={"n_points": int(keep.sum()), "dim": dim})
    return PointSet(
        points=points[keep],
        packing_radius=r,
        covering_radius=R,
        window=window,
        module_coords=coords[keep],
        basis=basis,
        provenance={"generator": "lattice", "basis": basis.tolist(), "window": window.to_text()},
    )


def integer_lattice(dimension: int, half_width: float) -> PointSet:
    """
    Z^d inside the centred cube [-half_width, half_width]^d
    """
    return lattice(np.eye(dimension), Box.cube(half_width, dimension))


def coin_coloured_lattice(half_width: int, seed: Optional[int] = None) -> PointSet:
    """
    Z in [-half_width, half_width] with independent fair-coin colours "a"/"b"

    Patches of a coin-coloured lattice do not recur with bounded gaps, so
    it serves as the non-repetitive control next to linearly repetitive
    chains.
    """
    seed = Config.get_runtime_config()["seed"] if seed is None else seed
    base = integer_lattice(1, float(half_width))
    rng = np.random.default_rng(seed)
    colors = tuple(np.where(rng.random(len(base)) < 0.5, "a", "b"))
    provenance = {"generator": "coin_coloured_lattice", "half_width": half_width, "seed": seed}
    return PointSet(
        points=base.points,
        packing_radius=base.packing_radius,
        covering_radius=base.covering_radius,
        window=base.window,
        module_coords=base.module_coords,
        basis=base.basis,
        colors=colors,
        provenance=provenance,
    )


def hexagonal_basis() -> np.ndarray:
    return np.array([[1.0, 0.0], [0.5, math.sqrt(3) / 2.0]])
