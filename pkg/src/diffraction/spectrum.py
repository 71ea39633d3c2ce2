import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from src.config.config import Config
from src.core.geometry import crop
from src.models.errors import PreconditionError, ValidationError
from src.models.geometry import Box
from src.models.pointset import PointSet

logger = logging.getLogger(__name__)

TAPERS = ("none", "hann")


@dataclass(frozen=True)
class Spectrum:
    """
    Finite-volume diffraction intensities on a wave-vector grid

    `intensities` holds I(k) = |sum_x h(x) w_x e^{-2 pi i k.x}|^2 / N_h with
    N_h = (integral of h)^2 / vol, so the untapered case is |S(k)|^2 / vol
    and a Bragg peak of weight I grows like I * vol under either taper.
    """
    k_grid: np.ndarray = field(repr=False)
    intensities: np.ndarray = field(repr=False)
    volume: float
    n_points: int
    taper: str = "none"

    @property
    def per_volume(self) -> np.ndarray:
        return self.intensities / self.volume

    def to_rows(self) -> List[Dict[str, float]]:
        names = ["kx", "ky"][: self.k_grid.shape[1]]
        return [
            {**{n: float(v) for n, v in zip(names, k)}, "intensity_per_volume": float(i)}
            for k, i in zip(self.k_grid, self.per_volume)
        ]


def default_k_grid(dimension: int, size: Optional[int] = None, k_max: Optional[float] = None) -> np.ndarray:
    """
    Uniform grid on [0, k_max]^d: `size` points in 1-D, a square of side sqrt(size) in 2-D
    """
    config = Config.get_diffraction_config()
    size = size or config["k_grid_size"]
    k_max = config["k_max"] if k_max is None else k_max
    if dimension == 1:
        return np.linspace(0.0, k_max, size).reshape(-1, 1)
    side = max(2, int(np.sqrt(size)))
    axis = np.linspace(0.0, k_max, side)
    return np.array(np.meshgrid(axis, axis, indexing="ij")).reshape(2, -1).T


def _as_grid(k_grid, dimension: int) -> np.ndarray:
    k_grid = np.asarray(k_grid, dtype=float)
    if k_grid.ndim == 1 and dimension == 1:
        k_grid = k_grid.reshape(-1, 1)
    if k_grid.ndim != 2 or k_grid.shape[1] != dimension or not np.all(np.isfinite(k_grid)):
        raise ValidationError(f"k grid must be a finite array of {dimension}-vectors")
    return k_grid


def taper_profile(ps: PointSet, taper: str) -> np.ndarray:
    """
    Per-point taper values h(x) on the window, with the normalization N_h
    """
    if taper not in TAPERS:
        raise ValidationError(f"unknown taper '{taper}'")
    if taper == "none":
        return np.ones(len(ps))
    rel = (ps.points - ps.window.center) / ps.window.extents
    return np.prod(np.cos(np.pi * rel) ** 2, axis=1)


def _normalization(volume: float, dimension: int, taper: str) -> float:
    # integral of cos^2 over its period is half the length
    return volume if taper == "none" else volume / 4.0 ** dimension


def structure_factor(ps: PointSet, k_grid: np.ndarray, taper: str = "none", threads: Optional[int] = None) -> np.ndarray:
    """
    Exponential sums sum_x h(x) w_x e^{-2 pi i k.x}, evaluated directly in chunks of k
    """
    k_grid = _as_grid(k_grid, ps.dimension)
    amplitudes = ps.effective_weights() * taper_profile(ps, taper)
    points = ps.points
    chunk = max(1, min(Config.get_diffraction_config()["chunk_size"], (1 << 22) // max(len(ps), 1)))
    starts = list(range(0, len(k_grid), chunk))

    def evaluate(start: int) -> np.ndarray:
        block = k_grid[start:start + chunk]
        return np.exp(-2j * np.pi * (block @ points.T)) @ amplitudes

    threads = threads or Config.get_runtime_config()["threads"]
    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(evaluate, starts))
    else:
        parts = [evaluate(s) for s in starts]
    return np.concatenate(parts) if parts else np.empty(0, dtype=complex)


def intensity(ps: PointSet, k_grid: np.ndarray, taper: str = "none", threads: Optional[int] = None) -> Spectrum:
    """
    Diffraction intensity of the windowed sample

    Args:
        ps: Point set
        k_grid: (m, d) wave vectors (a flat array is accepted in 1-D)
        taper: "none" for the plain |S|^2 / vol, "hann" to suppress window leakage
        threads: Worker threads over k chunks

    Returns:
        Spectrum on exactly the given grid
    """
    k_grid = _as_grid(k_grid, ps.dimension)
    sums = structure_factor(ps, k_grid, taper, threads)
    volume = ps.window.volume
    values = np.abs(sums) ** 2 / _normalization(volume, ps.dimension, taper)
    logger.debug("intensity", extra={"n_k": len(k_grid), "n_points": len(ps), "taper": taper})
    return Spectrum(k_grid=k_grid, intensities=values, volume=volume, n_points=len(ps), taper=taper)


def integer_box(ps: PointSet, side: int, center: Optional[np.ndarray] = None) -> Box:
    """
    Box holding exactly `side`^d integer sites, centred as closely as possible
    """
    center = ps.window.center if center is None else center
    start = np.floor(center) - side // 2
    return Box(tuple((float(a) - 0.5, float(a) + side - 0.5) for a in start))


def box_fft(ps: PointSet, box: Box) -> np.ndarray:
    """
    |S(j/L)|^2 / vol for all j in (Z/L)^d by one FFT, for integer-coordinate samples

    Args:
        ps: Point set with integer coordinates
        box: Box from `integer_box`

    Returns:
        Array of shape (L,)*d indexed by j
    """
    sample = crop(ps, box)
    side = int(round(box.extents[0]))
    sites = np.round(sample.points - (box.lower + 0.5)).astype(np.int64)
    if not np.allclose(sample.points, np.round(sample.points), atol=1e-9, rtol=0.0):
        raise PreconditionError("fast transform needs integer coordinates")
    grid = np.zeros((side,) * ps.dimension, dtype=complex)
    np.add.at(grid, tuple(sites.T), sample.effective_weights())
    return np.abs(np.fft.fftn(grid)) ** 2 / box.volume


def fft_spectrum(ps: PointSet, side: int) -> Spectrum:
    """
    Spectrum on the full grid (Z/L)^d from the fast transform; agrees with `intensity`
    """
    box = integer_box(ps, side)
    values = box_fft(ps, box)
    axis = np.arange(side) / side
    k_grid = np.array(np.meshgrid(*([axis] * ps.dimension), indexing="ij")).reshape(ps.dimension, -1).T
    return Spectrum(k_grid=k_grid, intensities=values.reshape(-1), volume=box.volume, n_points=int(len(crop(ps, box))))
