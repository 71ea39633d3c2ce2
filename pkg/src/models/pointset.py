from dataclasses import dataclass, field, replace
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from src.config.config import Config
from src.models.errors import PointSetError
from src.models.geometry import Box


def _frozen(array: Optional[np.ndarray]) -> Optional[np.ndarray]:
    if array is not None:
        array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class PointSet:
    """
    Finite sample of a point set in R^1 or R^2, complete inside `window`

    When `module_coords` is given, every point equals
    offset + module_coords @ basis, which lets patch comparison use exact
    integer arithmetic instead of float quantization.
    """
    points: np.ndarray
    packing_radius: float
    covering_radius: float
    window: Box
    module_coords: Optional[np.ndarray] = None
    basis: Optional[np.ndarray] = None
    offset: Optional[np.ndarray] = None
    weights: Optional[np.ndarray] = None
    colors: Optional[Tuple[str, ...]] = None
    delone: bool = True
    provenance: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        points = np.array(self.points, dtype=float)
        if points.ndim == 1:
            points = points.reshape(-1, self.window.dimension)
        if points.ndim != 2:
            raise PointSetError("points must be a 2-D array of coordinate rows")
        dim = points.shape[1]
        if dim not in (1, 2):
            raise PointSetError(f"dimension {dim} not supported (1 or 2)")
        if self.window.dimension != dim:
            raise PointSetError("window dimension does not match the points")
        bad = np.where(~np.all(np.isfinite(points), axis=1))[0]
        if bad.size:
            raise PointSetError(f"non-finite coordinate in row {int(bad[0])}")

        tol = Config.get_geometry_config()["window_tolerance"]
        outside = np.where(~self.window.contains(points, tol))[0]
        if outside.size:
            raise PointSetError(f"point {int(outside[0])} lies outside the window")
        if not (0 < self.packing_radius <= self.covering_radius):
            raise PointSetError("radii must satisfy 0 < r <= R")

        n = points.shape[0]
        module_coords, basis, offset = self.module_coords, self.basis, self.offset
        if module_coords is not None:
            module_coords = np.array(module_coords, dtype=np.int64).reshape(n, -1)
            basis = np.array(basis, dtype=float).reshape(module_coords.shape[1], dim)
            offset = np.zeros(dim) if offset is None else np.array(offset, dtype=float).reshape(dim)
            embedded = offset + module_coords @ basis
            scale = np.maximum(1.0, np.abs(points))
            if n and np.max(np.abs(embedded - points) / scale) > 1e-12:
                raise PointSetError("module coordinates do not reproduce the points")
        elif basis is not None or offset is not None:
            raise PointSetError("basis/offset given without module coordinates")

        weights = self.weights
        if weights is not None:
            weights = np.array(weights, dtype=complex).reshape(-1)
            if weights.shape[0] != n:
                raise PointSetError("weights length differs from the number of points")
        colors = self.colors
        if colors is not None:
            colors = tuple(str(c) for c in colors)
            if len(colors) != n:
                raise PointSetError("colors length differs from the number of points")

        object.__setattr__(self, "points", _frozen(points))
        object.__setattr__(self, "module_coords", _frozen(module_coords))
        object.__setattr__(self, "basis", _frozen(basis))
        object.__setattr__(self, "offset", _frozen(offset))
        object.__setattr__(self, "weights", _frozen(weights))
        object.__setattr__(self, "colors", colors)
        object.__setattr__(self, "packing_radius", float(self.packing_radius))
        object.__setattr__(self, "covering_radius", float(self.covering_radius))
        object.__setattr__(self, "provenance", dict(self.provenance))

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    @property
    def has_module_coords(self) -> bool:
        return self.module_coords is not None

    def effective_weights(self) -> np.ndarray:
        if self.weights is None:
            return np.ones(len(self), dtype=complex)
        return np.asarray(self.weights)

    def subset(self, indices: Sequence[int], window: Box, provenance: Dict[str, Any]) -> "PointSet":
        """
        Restrict to the given rows, keeping every per-point attribute aligned
        """
        indices = np.asarray(indices, dtype=np.int64)
        return replace(
            self,
            points=self.points[indices],
            module_coords=None if self.module_coords is None else self.module_coords[indices],
            weights=None if self.weights is None else self.weights[indices],
            colors=None if self.colors is None else tuple(self.colors[i] for i in indices),
            window=window,
            provenance=provenance,
        )
