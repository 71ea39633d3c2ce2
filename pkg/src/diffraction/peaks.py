import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize_scalar
from sympy import primefactors

from src.config.config import Config
from src.core.geometry import crop
from src.diffraction.spectrum import Spectrum, box_fft, integer_box, intensity, structure_factor
from src.models.errors import PreconditionError, ValidationError, WindowTooSmallError
from src.models.geometry import Box
from src.models.pointset import PointSet

logger = logging.getLogger(__name__)

CONSISTENT = "consistent-with-pure-point"
CONTINUOUS = "continuous-component-detected"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class Peak:
    k: Tuple[float, ...]
    intensity: float
    scaling_r2: float
    exponent: float

    def to_dict(self) -> Dict[str, Any]:
        return {"k": list(self.k), "intensity": self.intensity, "scaling_r2": self.scaling_r2, "exponent": self.exponent}


@dataclass(frozen=True)
class PeakReport:
    peaks: List[Peak]
    background_level: float
    pure_point_fraction: float
    volumes: List[float] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "peaks": [p.to_dict() for p in self.peaks],
            "background_level": self.background_level,
            "pure_point_fraction": self.pure_point_fraction,
            "volumes": self.volumes,
        }


@dataclass(frozen=True)
class Diagnosis:
    report: PeakReport
    verdict: str
    strategy: str
    masses: List[float]

    def to_dict(self) -> Dict[str, Any]:
        return {"verdict": self.verdict, "strategy": self.strategy, "masses": self.masses, **self.report.to_dict()}


def _scaling_fit(volumes: np.ndarray, values: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Per-k linear fit of I_n against volume, plus the log-log growth exponent

    Returns:
        slopes, R^2 and exponents, one per column of `values`
    """
    v = volumes - volumes.mean()
    y = values - values.mean(axis=0)
    slopes = (v @ y) / (v @ v)
    residual = y - np.outer(v, slopes)
    ss_tot = np.einsum("ij,ij->j", y, y)
    ss_res = np.einsum("ij,ij->j", residual, residual)
    with np.errstate(divide="ignore", invalid="ignore"):
        r2 = np.where(ss_tot > 0, 1.0 - ss_res / ss_tot, 0.0)
        logs = np.log(np.where(values > 0, values, np.nan))
    lv = np.log(volumes) - np.log(volumes).mean()
    exponents = (lv @ (logs - logs.mean(axis=0))) / (lv @ lv)
    return slopes, r2, np.nan_to_num(exponents, nan=-np.inf)


def _lobe_mask(k_grid: np.ndarray, centers: np.ndarray, halfwidth: float) -> np.ndarray:
    mask = np.zeros(len(k_grid), dtype=bool)
    for c in centers:
        mask |= np.all(np.abs(k_grid - c) <= halfwidth, axis=1)
    return mask


def _lobe_maxima(k_grid: np.ndarray, rows: np.ndarray, heights: np.ndarray, halfwidth: float) -> np.ndarray:
    """
    Rows that carry the largest height inside their own lobe; the other
    grid points of a lobe belong to the same Bragg peak
    """
    kept: List[int] = []
    for i in rows[np.argsort(-heights[rows], kind="stable")]:
        if not kept or not np.any(np.all(np.abs(k_grid[kept] - k_grid[i]) <= halfwidth, axis=1)):
            kept.append(int(i))
    return np.array(sorted(kept), dtype=np.int64)


def detect_peaks(spectra: Sequence[Spectrum], lobe_halfwidth: Optional[float] = None) -> PeakReport:
    """
    Bragg peaks as wave vectors whose intensity grows linearly with volume

    Args:
        spectra: Spectra of nested samples on one shared grid, increasing volume
        lobe_halfwidth: When set, scaling grid points within lobe_halfwidth / L
            of a stronger one (L the largest side) are merged into it and peak
            mass is summed over those lobes; otherwise every scaling grid
            point is its own peak

    Returns:
        PeakReport with peaks ordered by decreasing intensity
    """
    config = Config.get_diffraction_config()
    if len(spectra) < 3:
        raise ValidationError("need at least 3 volumes")
    k_grid = spectra[0].k_grid
    for s in spectra[1:]:
        if s.k_grid.shape != k_grid.shape or not np.allclose(s.k_grid, k_grid, rtol=0.0, atol=1e-12):
            raise ValidationError("spectra must share one k grid")
    volumes = np.array([s.volume for s in spectra], dtype=float)
    if np.any(np.diff(volumes) <= 0):
        raise ValidationError("volumes not increasing")

    values = np.stack([s.intensities for s in spectra])
    slopes, r2, exponents = _scaling_fit(volumes, values)
    largest = values[-1] / volumes[-1]
    scaling = (r2 >= config["r2_threshold"]) & (exponents >= config["min_exponent"]) & (slopes > 0)
    background = float(np.median(largest[~scaling])) if np.any(~scaling) else 0.0
    # values at rounding level never count, whatever their scaling
    floor = 1e-9 * float(largest.max()) if largest.size else 0.0
    is_peak = scaling & (largest >= config["peak_snr"] * background) & (largest > floor)

    rows = np.nonzero(is_peak)[0]
    if lobe_halfwidth is not None:
        side = volumes[-1] ** (1.0 / k_grid.shape[1])
        rows = _lobe_maxima(k_grid, rows, largest, lobe_halfwidth / side)
    rows = rows[np.argsort(-slopes[rows], kind="stable")]
    peaks = [Peak(tuple(float(v) for v in k_grid[i]), float(slopes[i]), float(r2[i]), float(exponents[i])) for i in rows]

    if lobe_halfwidth is None:
        in_peaks = is_peak
    else:
        in_peaks = _lobe_mask(k_grid, k_grid[rows], lobe_halfwidth / side)
    total = float(largest.sum())
    fraction = float(largest[in_peaks].sum() / total) if total > 0 else 0.0
    background = float(np.median(largest[~in_peaks])) if np.any(~in_peaks) else 0.0

    logger.info("peak detection", extra={"n_peaks": len(peaks), "pure_point_fraction": fraction})
    return PeakReport(peaks=peaks, background_level=background, pure_point_fraction=min(1.0, fraction), volumes=volumes.tolist())


def _verdict(fraction: float, masses: List[float], config: Dict[str, Any]) -> str:
    if fraction >= config["pure_point_threshold"]:
        return CONSISTENT
    stable = abs(masses[-1] - masses[-2]) <= config["mass_stability"] * max(abs(masses[-2]), 1e-300)
    if fraction <= config["continuous_threshold"] and stable:
        return CONTINUOUS
    return INCONCLUSIVE


def _box_sides(usable: int, config: Dict[str, Any]) -> Tuple[int, List[int]]:
    """
    A resonance modulus q and nested box sides that are multiples of q

    The modulus starts from the configured value and sheds its largest
    prime factor until `n_volumes` distinct multiples fit.
    """
    n = config["n_volumes"]
    q = int(config["resonance_modulus"])
    while q > 1 and usable // q < n:
        q //= max(primefactors(q))
    m_max = usable // q
    if m_max < n:
        raise WindowTooSmallError(f"window too small for {n} nested volumes")
    return q, [q * math.ceil(m_max * i / n) for i in range(1, n + 1)]


def _fft_diagnostic(ps: PointSet, config: Dict[str, Any]) -> Diagnosis:
    usable = int(math.floor(float(np.min(ps.window.extents)))) - 3
    q, sides = _box_sides(usable, config)
    dim = ps.dimension
    axis = np.arange(q) / q
    common = np.array(np.meshgrid(*([axis] * dim), indexing="ij")).reshape(dim, -1).T

    spectra, masses, full = [], [], None
    for side in sides:
        box = integer_box(ps, side)
        full = box_fft(ps, box)
        masses.append(float(full.sum() / box.volume))
        step = side // q
        coarse = full[tuple(slice(None, None, step) for _ in range(dim))]
        spectra.append(Spectrum(common, coarse.reshape(-1), box.volume, int(len(crop(ps, box)))))

    report = detect_peaks(spectra)
    # peak mass is exact on the full grid of the largest box: Bragg peaks at
    # denominators dividing q sit on grid points and the lobes vanish elsewhere
    step = sides[-1] // q
    peak_sites = np.zeros(full.shape, dtype=bool)
    for p in report.peaks:
        j = tuple(int(round(v * q)) * step for v in p.k)
        peak_sites[j] = True
    total = float(full.sum())
    fraction = float(full[peak_sites].sum() / total) if total > 0 else 0.0
    rest = full[~peak_sites] / spectra[-1].volume
    report = replace(
        report,
        pure_point_fraction=min(1.0, fraction),
        background_level=float(np.median(rest)) if rest.size else 0.0,
    )
    return Diagnosis(report, _verdict(report.pure_point_fraction, masses, config), f"fft/q={q}", masses)


def _refine(ps: PointSet, k0: float, width: float, side: float) -> float:
    def objective(k: float) -> float:
        return -float(np.abs(structure_factor(ps, np.array([[k]]), "hann", threads=1)[0]) ** 2)

    result = minimize_scalar(objective, bounds=(k0 - width, k0 + width), method="bounded", options={"xatol": 1e-3 / side})
    return float(result.x) if -result.fun >= -objective(k0) else k0


def _taper_diagnostic(ps: PointSet, config: Dict[str, Any]) -> Diagnosis:
    dim = ps.dimension
    extent = float(np.min(ps.window.extents))
    center = ps.window.center
    n = config["n_volumes"]
    boxes = [Box.cube(extent * i / (2.0 * n), dim, center) for i in range(1, n + 1)]
    samples = [crop(ps, b) for b in boxes]
    largest = samples[-1]
    dk = 1.0 / (config["oversampling"] * extent)
    count = int(math.ceil(config["k_max"] / dk)) + 1
    if dim == 2:
        count = min(count, 256)
    axis = np.linspace(0.0, config["k_max"], count)
    k_grid = axis.reshape(-1, 1) if dim == 1 else np.array(np.meshgrid(axis, axis, indexing="ij")).reshape(2, -1).T

    top = intensity(largest, k_grid, "hann").intensities
    if dim == 1:
        per_volume = top / largest.window.volume
        is_max = (per_volume >= np.roll(per_volume, 1)) & (per_volume >= np.roll(per_volume, -1))
        is_max[0] = per_volume[0] >= per_volume[1]
        is_max[-1] = per_volume[-1] >= per_volume[-2]
        candidates = np.nonzero(is_max & (per_volume >= config["peak_snr"] * np.median(per_volume)))[0]
        step = axis[1] - axis[0]
        k_grid = k_grid.copy()
        for i in candidates:
            k_grid[i, 0] = _refine(largest, float(axis[i]), step, extent)
        k_grid = np.sort(k_grid, axis=0)

    spectra = [intensity(s, k_grid, "hann") for s in samples]
    cell = (axis[1] - axis[0]) ** dim
    masses = [float(np.sum(s.per_volume) * cell) for s in spectra]
    report = detect_peaks(spectra, lobe_halfwidth=config["lobe_halfwidth"])
    return Diagnosis(report, _verdict(report.pure_point_fraction, masses, config), "taper", masses)


def pure_point_diagnostic(ps: PointSet, config: Optional[Dict[str, Any]] = None) -> Diagnosis:
    """
    Classify the diffraction of a sample from nested centred volumes

    Integer-coordinate samples (lattices, visible points, unit-length
    substitution chains) are transformed exactly by FFT; everything else
    goes through a Hann-tapered scan with refined peak positions.

    Verdicts: pure-point fraction >= 0.95 is consistent with pure point;
    <= 0.7 with a total mass stable to 25% between the two largest volumes
    means a continuous component; anything else is inconclusive.

    Args:
        ps: Point set
        config: Overrides of the diffraction configuration

    Returns:
        Diagnosis holding the PeakReport and verdict
    """
    config = {**Config.get_diffraction_config(), **(config or {})}
    if not len(ps):
        raise PreconditionError("empty sample")
    integer = np.allclose(ps.points, np.round(ps.points), rtol=0.0, atol=1e-9)
    diagnosis = _fft_diagnostic(ps, config) if integer else _taper_diagnostic(ps, config)
    logger.info(
        "pure point diagnostic",
        extra={"verdict": diagnosis.verdict, "strategy": diagnosis.strategy, "fraction": diagnosis.report.pure_point_fraction},
    )
    return diagnosis
