import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from src.config.config import Config
from src.mahler.polynomial import LaurentPolynomial, eval_on_torus
from src.models.errors import ValidationError

logger = logging.getLogger(__name__)

_TINY = np.finfo(float).tiny


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float
    levels: List[Tuple[int, float]] = field(default_factory=list)
    singular_cells_refined: int = 0
    converged: bool = True
    monotone: bool = True

    def to_dict(self) -> Dict[str, Any]:
        return {
            "value": self.value,
            "error_estimate": self.error_estimate,
            "levels": [{"grid": n, "value": v} for n, v in self.levels],
            "singular_cells_refined": self.singular_cells_refined,
            "converged": self.converged,
            "monotone": self.monotone,
        }


def _log_modulus(P: LaurentPolynomial, s: np.ndarray, t: np.ndarray, h: float) -> Tuple[np.ndarray, np.ndarray]:
    modulus = np.abs(eval_on_torus(P, s, t))
    on_zero = modulus == 0
    if np.any(on_zero):
        modulus[on_zero] = np.abs(eval_on_torus(P, s[on_zero] + h / 8.0, t[on_zero] + h / 8.0))
    return np.log(np.maximum(modulus, _TINY)), modulus


def _cells(P: LaurentPolynomial, s0: np.ndarray, t0: np.ndarray, h: float, depth: int, threshold: float) -> Tuple[np.ndarray, int]:
    """
    Midpoint values of log|P| on cells with lower-left corners (s0, t0) and side h

    Cells whose midpoint modulus falls below `threshold` are split into four
    and averaged recursively, at most `depth` times.
    """
    values, modulus = _log_modulus(P, s0 + h / 2.0, t0 + h / 2.0, h)
    small = np.nonzero(modulus < threshold)[0]
    if depth == 0 or not len(small):
        return values, 0
    half = h / 2.0
    sub_s = np.concatenate([s0[small] + ds for ds in (0.0, half, 0.0, half)])
    sub_t = np.concatenate([t0[small] + dt for dt in (0.0, 0.0, half, half)])
    sub_values, deeper = _cells(P, sub_s, sub_t, half, depth - 1, threshold)
    values[small] = sub_values.reshape(4, -1).mean(axis=0)
    return values, len(small) + deeper


def _level(P: LaurentPolynomial, n: int, depth: int, threshold: float) -> Tuple[float, int]:
    h = 1.0 / n
    corners = np.arange(n) * h
    s0, t0 = (a.reshape(-1) for a in np.meshgrid(corners, corners, indexing="ij"))
    values, refined = _cells(P, s0, t0, h, depth, threshold)
    return float(np.mean(values)), refined


def mahler_measure(P: LaurentPolynomial, base_grid: Optional[int] = None, max_levels: Optional[int] = None) -> QuadratureResult:
    """
    Logarithmic Mahler measure: the average of log|P(e(s), e(t))| over [0,1)^2

    Each level doubles the midpoint grid, starting from `base_grid`, and
    locally refines cells near the zero set of P. Iteration stops once the
    change between levels is below the configured tolerance (after at
    least three levels); the error estimate is that change plus its
    geometric tail. It is not a rigorous enclosure.

    Args:
        P: Laurent polynomial, not identically zero
        base_grid: Cells per side at the first level
        max_levels: Number of grid doublings allowed

    Returns:
        QuadratureResult; `converged` is False when the tolerance was never met
    """
    config = Config.get_quadrature_config()
    base_grid = base_grid or config["base_grid"]
    max_levels = max_levels or config["max_levels"]
    if base_grid < 1 or max_levels < 1:
        raise ValidationError("base grid and level count must be positive")
    threshold = config["singular_factor"] * P.coefficient_norm

    levels: List[Tuple[int, float]] = []
    refined_total = 0
    converged = False
    for level in range(max_levels):
        n = base_grid << level
        value, refined = _level(P, n, config["refine_depth"], threshold)
        levels.append((n, value))
        refined_total += refined
        logger.debug("quadrature level", extra={"grid": n, "value": value, "refined": refined})
        if len(levels) >= 3 and abs(levels[-1][1] - levels[-2][1]) <= config["tolerance"]:
            converged = True
            break

    deltas = [abs(b[1] - a[1]) for a, b in zip(levels, levels[1:])]
    if deltas:
        last = deltas[-1]
        ratio = last / deltas[-2] if len(deltas) > 1 and deltas[-2] > 0 else 0.5
        tail = last * ratio / (1.0 - ratio) if ratio < 1.0 else last
        error = last + tail
    else:
        error = 0.0
    monotone = all(b <= a + 1e-15 for a, b in zip(deltas[-2:], deltas[-1:]))

    result = QuadratureResult(
        value=levels[-1][1],
        error_estimate=float(error),
        levels=levels,
        singular_cells_refined=refined_total,
        converged=converged,
        monotone=monotone,
    )
    if not converged:
        logger.warning("mahler quadrature did not converge", extra={"levels": len(levels), "error": error})
    return result
