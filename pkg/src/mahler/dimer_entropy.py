import logging
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from src.config.config import Config
from src.generators.dimers import TilingCountResult, domino_count, lozenge_count
from src.mahler.polynomial import DOMINO_POLYNOMIAL, LOZENGE_POLYNOMIAL, LaurentPolynomial
from src.mahler.quadrature import mahler_measure
from src.models.errors import ConvergenceError, DegenerateEnsembleError, ValidationError

logger = logging.getLogger(__name__)

MODELS = ("domino", "lozenge")


def _check_model(model: str) -> None:
    if model not in MODELS:
        raise ValidationError(f"unknown tiling model '{model}'")


def default_sizes(model: str) -> List[int]:
    _check_model(model)
    return list(Config.get_dimer_config()[f"{model}_sizes"])


def polynomial_for(model: str) -> LaurentPolynomial:
    _check_model(model)
    return DOMINO_POLYNOMIAL if model == "domino" else LOZENGE_POLYNOMIAL


def _count(model: str, size: int) -> TilingCountResult:
    return domino_count(size, size) if model == "domino" else lozenge_count(size, size, size)


def _fit(counts: List[TilingCountResult]) -> Dict[str, float]:
    x = np.array([1.0 / r.shape[0] for r in counts])
    y = np.array([r.log_count_per_site for r in counts])
    slope, intercept = np.polyfit(x, y, 1)
    residual = y - (slope * x + intercept)
    return {"per_site": float(intercept), "fit_residual": float(np.max(np.abs(residual))), "slope": float(slope)}


def dimer_entropy_extrapolation(model: str, sizes: Optional[Sequence[int]] = None) -> Dict[str, Any]:
    """
    Per-site tiling entropy extrapolated to infinite size

    log(count)/sites is fitted against 1/size with an affine model and the
    intercept reported. Sizes are square sides n x n for dominoes and
    regular hexagons (n, n, n) for lozenges.

    Returns:
        {"model", "sizes", "per_site", "fit_residual", "slope", "counts"}
    """
    _check_model(model)
    sizes = list(default_sizes(model) if sizes is None else sizes)
    if len(sizes) < 2:
        raise ValidationError("need ≥ 2 sizes")
    if len(set(sizes)) != len(sizes):
        raise ValidationError("sizes must be distinct")
    counts = [_count(model, n) for n in sorted(sizes)]
    if any(r.count == 0 for r in counts):
        raise DegenerateEnsembleError("degenerate ensemble")
    fit = _fit(counts)
    logger.info("dimer entropy extrapolation", extra={"model": model, **fit})
    return {"model": model, "sizes": sorted(sizes), **fit, "counts": [r.to_dict() for r in counts]}


def mahler_vs_dimer_report(model: str, sizes: Optional[Sequence[int]] = None) -> Dict[str, Any]:
    """
    Ratio of the Mahler measure of the model's polynomial to the extrapolated
    per-site entropy, over growing prefixes of the size list

    The constant is measured, not assumed; `ratio_stability` is the relative
    change of the ratio between the two largest prefixes.
    """
    _check_model(model)
    sizes = sorted(default_sizes(model) if sizes is None else sizes)
    if len(sizes) < 3:
        raise ValidationError("need ≥ 3 sizes for a stability estimate")
    counts = [_count(model, n) for n in sizes]
    if any(r.count == 0 for r in counts):
        raise DegenerateEnsembleError("degenerate ensemble")

    quadrature = mahler_measure(polynomial_for(model))
    if not quadrature.converged:
        raise ConvergenceError("Mahler quadrature did not converge")

    history = []
    for end in range(2, len(counts) + 1):
        fit = _fit(counts[:end])
        ratio = quadrature.value / fit["per_site"] if fit["per_site"] > 0 else float("inf")
        history.append({"sizes": sizes[:end], "per_site": fit["per_site"], "ratio": ratio})
    last, previous = history[-1]["ratio"], history[-2]["ratio"]
    stability = abs(last - previous) / abs(last) if np.isfinite(last) and last != 0 else float("inf")

    report = {
        "model": model,
        "m_value": quadrature.value,
        "m_error": quadrature.error_estimate,
        "per_site": history[-1]["per_site"],
        "ratio": last,
        "ratio_stability": stability,
        "history": history,
    }
    logger.info("mahler vs dimer", extra={k: v for k, v in report.items() if k != "history"})
    return report
