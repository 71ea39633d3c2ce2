import itertools
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy.spatial import ConvexHull, QhullError, cKDTree

from src.config.config import Config
from src.models.errors import PointSetError, WindowError
from src.models.geometry import Box
from src.models.pointset import PointSet

logger = logging.getLogger(__name__)

GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0
GOLDEN_CONJUGATE = (1.0 - math.sqrt(5.0)) / 2.0

Window = Union[Tuple[float, float], np.ndarray]


@dataclass(frozen=True, eq=False)
class CutProjectScheme:
    """
    Lattice in R^n with projections to physical space R^d and internal space R^(n-d)

    `window_int` is a half-open interval (lo, hi) when the internal space is
    1-D, and a convex polygon given by its vertices when it is 2-D.
    Lattice points are integer combinations of the rows of `lattice_basis`.
    """
    lattice_basis: np.ndarray
    proj_phys: np.ndarray
    proj_int: np.ndarray
    window_int: Window
    name: str = "cut_and_project"
    _halfspaces: Optional[np.ndarray] = field(default=None, init=False, repr=False)

    def __post_init__(self):
        basis = np.atleast_2d(np.asarray(self.lattice_basis, dtype=float))
        n = basis.shape[0]
        proj_phys = np.asarray(self.proj_phys, dtype=float).reshape(-1, n)
        proj_int = np.asarray(self.proj_int, dtype=float).reshape(-1, n)
        if basis.shape != (n, n) or proj_phys.shape[0] + proj_int.shape[0] != n:
            raise PointSetError("projection shapes do not split the lattice dimension")
        if abs(np.linalg.det(np.vstack([proj_phys, proj_int]) @ basis.T)) < 1e-12:
            raise PointSetError("projections are not complementary on the lattice")
        object.__setattr__(self, "lattice_basis", basis)
        object.__setattr__(self, "proj_phys", proj_phys)
        object.__setattr__(self, "proj_int", proj_int)

        if proj_int.shape[0] == 1:
            lo, hi = (float(v) for v in np.ravel(self.window_int))
            if not hi - lo > 0:
                raise WindowError("degenerate window")
            object.__setattr__(self, "window_int", (lo, hi))
        elif proj_int.shape[0] == 2:
            vertices = np.asarray(self.window_int, dtype=float).reshape(-1, 2)
            try:
                hull = ConvexHull(vertices)
            except QhullError:
                raise WindowError("degenerate window")
            if hull.volume <= 0:
                raise WindowError("degenerate window")
            object.__setattr__(self, "window_int", vertices[hull.vertices])
            object.__setattr__(self, "_halfspaces", hull.equations)
        else:
            raise PointSetError("internal space must be 1- or 2-dimensional")

    @property
    def total_dim(self) -> int:
        return self.lattice_basis.shape[0]

    @property
    def physical_dim(self) -> int:
        return self.proj_phys.shape[0]

    @property
    def internal_dim(self) -> int:
        return self.proj_int.shape[0]

    @property
    def embedding(self) -> np.ndarray:
        """
        Matrix taking integer lattice coordinates to (physical, internal) coordinates
        """
        return np.vstack([self.proj_phys, self.proj_int]) @ self.lattice_basis.T

    @property
    def phys_generators(self) -> np.ndarray:
        """
        Physical images of the lattice generators, one per row
        """
        return (self.proj_phys @ self.lattice_basis.T).T

    @property
    def internal_generators(self) -> np.ndarray:
        return (self.proj_int @ self.lattice_basis.T).T

    def window_bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        if self.internal_dim == 1:
            lo, hi = self.window_int
            return np.array([lo]), np.array([hi])
        return self.window_int.min(axis=0), self.window_int.max(axis=0)

    def window_volume(self) -> float:
        if self.internal_dim == 1:
            lo, hi = self.window_int
            return hi - lo
        return float(ConvexHull(self.window_int).volume)

    def density(self) -> float:
        """
        Expected number of points per unit physical volume
        """
        return self.window_volume() / abs(float(np.linalg.det(self.embedding)))

    def accepts(self, internal: np.ndarray, tol: float = 1e-12) -> np.ndarray:
        """
        Window membership of internal-space images (half-open on the right in 1-D)
        """
        internal = np.asarray(internal, dtype=float).reshape(-1, self.internal_dim)
        if self.internal_dim == 1:
            lo, hi = self.window_int
            y = internal[:, 0]
            return (y >= lo - tol) & (y < hi - tol)
        normals, offsets = self._halfspaces[:, :-1], self._halfspaces[:, -1]
        return np.all(internal @ normals.T + offsets <= tol, axis=1)

    def scaled(self, factor: float) -> "CutProjectScheme":
        """
        Same scheme with the window scaled about the internal origin
        """
        if self.internal_dim == 1:
            lo, hi = self.window_int
            window = (lo * factor, hi * factor)
        else:
            window = self.window_int * factor
        return replace(self, window_int=window)

    def internal_fill(self, phys_window: Box) -> float:
        """
        Largest internal-space distance from a window sample point to the
        nearest accepted internal image; small values mean the lattice
        projection fills the window
        """
        coords = _enumerate(self, phys_window)
        internal = coords @ self.internal_generators
        internal = internal[self.accepts(internal)]
        if not len(internal):
            return math.inf
        lo, hi = self.window_bounds()
        axes = [np.linspace(a, b, 64, endpoint=False) + (b - a) / 128 for a, b in zip(lo, hi)]
        grid_points = np.array(np.meshgrid(*axes, indexing="ij")).reshape(self.internal_dim, -1).T
        grid_points = grid_points[self.accepts(grid_points)]
        distances, _ = cKDTree(internal).query(grid_points)
        return float(np.max(distances))


def _enumerate(scheme: CutProjectScheme, phys_window: Box) -> np.ndarray:
    """
    Integer coordinates c whose (physical, internal) image lies in the
    product of the physical box and the window's bounding box

    The outer n-1 coefficients range over the bounding box of the preimage;
    the last coefficient is solved as an interval per outer tuple.
    """
    M = scheme.embedding
    n = scheme.total_dim
    wlo, whi = scheme.window_bounds()
    lower = np.concatenate([phys_window.lower, wlo])
    upper = np.concatenate([phys_window.upper, whi])

    inverse = np.linalg.inv(M)
    corners = np.array(list(itertools.product(*zip(lower, upper))))
    pre = corners @ inverse.T
    lo = np.floor(pre.min(axis=0)).astype(np.int64) - 1
    hi = np.ceil(pre.max(axis=0)).astype(np.int64) + 1

    outer_axes = [np.arange(a, b + 1) for a, b in zip(lo[:-1], hi[:-1])]
    outer = np.array(np.meshgrid(*outer_axes, indexing="ij")).reshape(n - 1, -1).T
    partial = outer @ M[:, :-1].T
    slope = M[:, -1]

    t_lo = np.full(len(outer), float(lo[-1]))
    t_hi = np.full(len(outer), float(hi[-1]))
    for row in range(n):
        if abs(slope[row]) < 1e-15:
            continue
        a = (lower[row] - partial[:, row]) / slope[row]
        b = (upper[row] - partial[:, row]) / slope[row]
        t_lo = np.maximum(t_lo, np.minimum(a, b))
        t_hi = np.minimum(t_hi, np.maximum(a, b))
    first = np.floor(t_lo - 1e-9).astype(np.int64)
    last = np.ceil(t_hi + 1e-9).astype(np.int64)
    counts = np.maximum(last - first + 1, 0)

    rows = np.repeat(np.arange(len(outer)), counts)
    offsets = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
    lasts = first[rows] + offsets
    return np.column_stack([outer[rows], lasts]).astype(np.int64)


def _measured_radii(points: np.ndarray, window: Box) -> Tuple[float, float]:
    if points.shape[1] == 1:
        gaps = np.diff(np.sort(points[:, 0]))
        return float(gaps.min()) / 2.0, float(gaps.max()) / 2.0
    tree = cKDTree(points)
    distances, _ = tree.query(points, k=2)
    r = float(distances[:, 1].min()) / 2.0
    # holes next to the window edge are truncation artefacts
    inner = window.erode(float(window.extents.min()) / 4.0) or window
    step = r / 2.0
    axes = [np.arange(lo, hi + step, step) for lo, hi in inner.bounds]
    grid_points = np.array(np.meshgrid(*axes, indexing="ij")).reshape(2, -1).T
    hole, _ = tree.query(grid_points)
    return r, max(r, float(hole.max()))


def model_set(scheme: CutProjectScheme, phys_window: Box) -> PointSet:
    """
    Cut-and-project set of `scheme` inside `phys_window`

    Enumeration is exhaustive over the lattice points whose image lies in
    phys_window x window, so the sample is complete in phys_window.

    Args:
        scheme: Cut-and-project data
        phys_window: Bounded physical box

    Returns:
        Delone PointSet whose module coordinates are the lattice coordinates
    """
    if phys_window.dimension != scheme.physical_dim:
        raise WindowError("physical window dimension does not match the scheme")
    coords = _enumerate(scheme, phys_window)
    internal = coords @ scheme.internal_generators
    points = coords @ scheme.phys_generators
    keep = scheme.accepts(internal) & phys_window.contains(points, Config.get_geometry_config()["window_tolerance"])
    coords, points = coords[keep], points[keep]
    order = np.lexsort(points.T[::-1])
    coords, points = coords[order], points[order]
    if len(points) < 2:
        raise WindowError("physical window holds fewer than two model-set points")

    r, R = _measured_radii(points, phys_window)
    logger.info("generated model set", extra={"scheme": scheme.name, "n_points": len(points)})
    return PointSet(
        points=points,
        packing_radius=r,
        covering_radius=R,
        window=phys_window,
        module_coords=coords,
        basis=scheme.phys_generators,
        provenance={
            "generator": "model_set",
            "scheme": scheme.name,
            "window_int": np.asarray(scheme.window_int).tolist(),
            "phys_window": phys_window.to_text(),
        },
    )


def fibonacci_scheme(window_length: Optional[float] = None) -> CutProjectScheme:
    """
    Fibonacci cut-and-project scheme on Z^2

    Physical image m + k*tau, internal image m + k*tau'. The window is
    [-L/tau, L/tau^2) with default length L = tau, which gives the gaps
    {1, tau}; L = 1 gives the gaps {tau, tau^2}.
    """
    length = GOLDEN if window_length is None else float(window_length)
    return CutProjectScheme(
        lattice_basis=np.eye(2),
        proj_phys=np.array([[1.0, GOLDEN]]),
        proj_int=np.array([[1.0, GOLDEN_CONJUGATE]]),
        window_int=(-length / GOLDEN, length / GOLDEN ** 2),
        name="fibonacci",
    )


def fibonacci_model_set(half_width: float, window_length: Optional[float] = None) -> PointSet:
    return model_set(fibonacci_scheme(window_length), Box(((-half_width, half_width),)))
