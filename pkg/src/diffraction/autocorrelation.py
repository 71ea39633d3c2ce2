import logging
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from src.config.config import Config
from src.core.geometry import build_index, crop
from src.models.errors import WindowTooSmallError
from src.models.pointset import PointSet

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Autocorrelation:
    """
    Finite-volume autocorrelation of a weighted Dirac comb

    Both partners of every pair lie in the window eroded by `z_max`, and
    `normalizing_volume` is the eroded volume. Differences are stored
    lexicographically sorted with their coefficients aligned.
    """
    z_max: float
    differences: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    normalizing_volume: float
    n_points: int

    @property
    def coefficients(self) -> Dict[Tuple[float, ...], complex]:
        return {tuple(float(v) for v in z): complex(c) for z, c in zip(self.differences, self.values)}

    def coefficient(self, z: Sequence[float], tol: float = 1e-9) -> complex:
        z = np.asarray(z, dtype=float).reshape(1, -1)
        hit = np.nonzero(np.all(np.abs(self.differences - z) <= tol, axis=1))[0]
        return complex(self.values[hit].sum()) if len(hit) else 0j

    def is_hermitian(self, tol: float = 1e-9) -> bool:
        for z, c in zip(self.differences, self.values):
            if abs(self.coefficient(-z, tol) - np.conj(c)) > tol:
                return False
        return True

    def fourier(self, k_grid: np.ndarray) -> np.ndarray:
        """
        Sum of c_z e^{-2 pi i k.z} over the support, real for hermitian coefficients
        """
        k_grid = np.asarray(k_grid, dtype=float).reshape(-1, self.differences.shape[1] if len(self.differences) else 1)
        if not len(self.differences):
            return np.zeros(len(k_grid))
        phases = np.exp(-2j * np.pi * (k_grid @ self.differences.T))
        return (phases @ self.values).real

    def to_rows(self) -> List[Dict[str, float]]:
        rows = []
        for z, c in zip(self.differences, self.values):
            row = {f"z{i}": float(v) for i, v in enumerate(z)}
            row.update({"re": float(c.real), "im": float(c.imag)})
            rows.append(row)
        return rows


def _pair_differences(ps: PointSet, owner: np.ndarray, neighbour: np.ndarray) -> np.ndarray:
    if ps.has_module_coords:
        return (ps.module_coords[owner] - ps.module_coords[neighbour]) @ ps.basis
    return ps.points[owner] - ps.points[neighbour]


def autocorrelation(ps: PointSet, z_max: float) -> Autocorrelation:
    """
    Autocorrelation coefficients up to |z| <= z_max

    Args:
        ps: Point set (weights default to 1)
        z_max: Cutoff radius, at most half the smallest window extent

    Returns:
        Autocorrelation with coeff(z) = (1/vol) sum of w_x conj(w_y) over x - y = z
    """
    if not z_max >= 0 or z_max > float(np.min(ps.window.extents)) / 2.0:
        raise WindowTooSmallError("z_max exceeds half the window extent")
    eroded = ps.window.erode(z_max)
    if eroded is None or eroded.volume <= 0:
        raise WindowTooSmallError("z_max exceeds half the window extent")
    inner = crop(ps, eroded)
    dim = ps.dimension

    owner, neighbour = build_index(inner).ball_candidates(inner.points, z_max)
    diff = inner.points[owner] - inner.points[neighbour]
    keep = np.einsum("ij,ij->i", diff, diff) <= z_max * z_max
    owner, neighbour = owner[keep], neighbour[keep]

    if not len(owner):
        empty = np.empty((0, dim))
        return Autocorrelation(z_max, empty, np.empty(0, dtype=complex), eroded.volume, len(inner))

    weights = inner.effective_weights()
    products = weights[owner] * np.conj(weights[neighbour])
    grid = Config.get_geometry_config()["quantization_grid"]
    keys = np.round(_pair_differences(inner, owner, neighbour) / grid).astype(np.int64)
    unique, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    # bincount accumulates in input order, so the sums are reproducible
    values = (np.bincount(inverse, weights=products.real, minlength=len(unique))
              + 1j * np.bincount(inverse, weights=products.imag, minlength=len(unique))) / eroded.volume
    vectors = unique * grid
    order = np.lexsort(vectors.T[::-1])

    logger.info("autocorrelation", extra={"z_max": z_max, "pairs": int(len(owner)), "support": int(len(unique))})
    return Autocorrelation(z_max, vectors[order], values[order], eroded.volume, len(inner))
