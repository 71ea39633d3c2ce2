import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from src.config.config import Config
from src.core.geometry import crop, translate
from src.models.errors import PointSetError, WindowError
from src.models.geometry import Box
from src.models.pointset import PointSet
from src.hullmetric.metric import separated

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HullSample:
    """
    Finite stand-in for the hull: translates -x + base cropped to one common box
    """
    base: PointSet
    elements: List[PointSet]
    translation_vectors: List[np.ndarray]

    def __post_init__(self):
        if len(self.elements) != len(self.translation_vectors):
            raise PointSetError("elements and translation vectors must align")
        windows = {e.window for e in self.elements}
        if len(windows) > 1:
            raise PointSetError("hull sample elements must share one window")

    def __len__(self) -> int:
        return len(self.elements)


def hull_sample(base: PointSet, vectors: Sequence[Sequence[float]], half_width: float) -> HullSample:
    """
    Translate the base by each vector and crop to the centred cube of given half width

    Args:
        base: Point set
        vectors: Translation vectors x (elements are -x + base)
        half_width: Half side of the common window

    Returns:
        HullSample
    """
    box = Box.cube(half_width, base.dimension)
    elements, kept = [], []
    for x in vectors:
        x = np.asarray(x, dtype=float).reshape(base.dimension)
        moved = translate(base, x)
        if not moved.window.contains_box(box):
            raise WindowError(f"translate by {x.tolist()} does not cover the common window")
        elements.append(crop(moved, box))
        kept.append(x)
    return HullSample(base=base, elements=elements, translation_vectors=kept)


@dataclass(frozen=True)
class SeparatedSet:
    indices: List[int]
    N_hat: int
    exact: bool


def _separation_matrix(hs: HullSample, D: float, threshold: float, resolution: float, threads: int) -> np.ndarray:
    n = len(hs)
    pairs = list(itertools.combinations(range(n), 2))

    def check(pair):
        i, j = pair
        return separated(hs.elements[i], hs.elements[j], D, threshold, resolution)

    if threads > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            flags = list(pool.map(check, pairs))
    else:
        flags = [check(p) for p in pairs]
    matrix = np.zeros((n, n), dtype=bool)
    for (i, j), flag in zip(pairs, flags):
        matrix[i, j] = matrix[j, i] = flag
    return matrix


def _largest_clique(matrix: np.ndarray) -> List[int]:
    n = matrix.shape[0]
    for size in range(n, 0, -1):
        for subset in itertools.combinations(range(n), size):
            if all(matrix[i, j] for i, j in itertools.combinations(subset, 2)):
                return list(subset)
    return []


def separated_set(
    hs: HullSample,
    D: float,
    eps: float,
    resolution: Optional[float] = None,
    exact: Optional[bool] = None,
    threads: Optional[int] = None,
) -> SeparatedSet:
    """
    A (D, eps)-separated subset of a hull sample

    Greedy selection in sample order gives a maximal subset and hence a
    lower bound for N(D, eps); samples up to the exact-search limit are
    solved exactly by default.

    Args:
        hs: Hull sample
        D: Orbit radius
        eps: Separation, pairs must satisfy d_D > eps
        resolution: Metric resolution
        exact: Force or skip the exhaustive search
        threads: Worker threads for the exhaustive pairwise checks

    Returns:
        SeparatedSet with the chosen indices
    """
    if not eps > 0:
        raise PointSetError("eps must be positive")
    config = Config.get_metric_config()
    resolution = resolution or config["resolution"]
    threshold = math.nextafter(eps, math.inf)
    if exact is None:
        exact = len(hs) <= config["exact_search_limit"]

    if exact:
        threads = threads or Config.get_runtime_config()["threads"]
        chosen = _largest_clique(_separation_matrix(hs, D, threshold, resolution, threads))
    else:
        chosen = []
        for i, element in enumerate(hs.elements):
            if all(separated(element, hs.elements[j], D, threshold, resolution) for j in chosen):
                chosen.append(i)
    logger.info("separated set", extra={"D": D, "eps": eps, "N_hat": len(chosen), "exact": exact})
    return SeparatedSet(indices=chosen, N_hat=len(chosen), exact=exact)


def covering_number(eps: float, R: float, dimension: int) -> int:
    """
    M(eps): cells of the grid of side eps/sqrt(d) meeting the closed ball B_R

    Each cell has diameter eps, so the cells form an eps/2-cover of B_R.
    """
    side = eps / math.sqrt(dimension)
    k = int(math.ceil(R / side)) + 1
    axis = np.arange(-k, k)
    lower = np.array(np.meshgrid(*([axis] * dimension), indexing="ij")).reshape(dimension, -1).T * side
    closest = np.clip(0.0, lower, lower + side)
    return int(np.sum(np.einsum("ij,ij->i", closest, closest) <= R * R))
