import itertools
import math
from dataclasses import dataclass
from typing import List

import numpy as np

from src.generators.model_sets import CutProjectScheme
from src.models.errors import PreconditionError


@dataclass(frozen=True)
class BraggPeak:
    k: float
    k_internal: float
    intensity: float


def cut_and_project_peaks(scheme: CutProjectScheme, k_max: float, min_intensity: float = 1e-6) -> List[BraggPeak]:
    """
    Analytic Bragg peaks of a 1-D model set with an interval window

    Peaks sit at the physical parts k of dual lattice vectors (k, k*), with
    amplitude dens_L * integral over W of e^{2 pi i k* y} dy, dens_L being the
    lattice point density of the embedding.

    Args:
        scheme: Scheme with 1-D physical and internal spaces
        k_max: Peaks with 0 <= k <= k_max are listed
        min_intensity: Smallest intensity kept

    Returns:
        Peaks ordered by decreasing intensity
    """
    if scheme.physical_dim != 1 or scheme.internal_dim != 1:
        raise PreconditionError("analytic peaks need 1-D physical and internal spaces")
    embedding = scheme.embedding
    dual = np.linalg.inv(embedding).T
    lattice_density = 1.0 / abs(float(np.linalg.det(embedding)))
    lo, hi = scheme.window_int
    width = hi - lo

    # |amplitude| <= dens_L / (pi |k*|) bounds the internal range that can matter
    k_star_max = lattice_density / (math.pi * math.sqrt(min_intensity))
    corners = np.array(list(itertools.product([0.0, k_max], [-k_star_max, k_star_max])))
    h = corners @ embedding
    lo_h = np.floor(h.min(axis=0)).astype(int)
    hi_h = np.ceil(h.max(axis=0)).astype(int)
    axes = [np.arange(a, b + 1) for a, b in zip(lo_h, hi_h)]
    integers = np.array(np.meshgrid(*axes, indexing="ij")).reshape(2, -1).T
    vectors = integers @ dual.T
    k, k_star = vectors[:, 0], vectors[:, 1]
    keep = (k >= -1e-12) & (k <= k_max + 1e-12)
    k, k_star = k[keep], k_star[keep]

    amplitude = np.where(
        np.abs(k_star) < 1e-15,
        width,
        np.abs(np.sin(np.pi * k_star * width) / (np.pi * np.where(k_star == 0, 1.0, k_star))),
    ) * lattice_density
    intensities = amplitude ** 2
    order = np.argsort(-intensities, kind="stable")
    return [
        BraggPeak(float(max(k[i], 0.0)), float(k_star[i]), float(intensities[i]))
        for i in order
        if intensities[i] >= min_intensity
    ]
