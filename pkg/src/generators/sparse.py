import logging
import math

import numpy as np

from src.models.errors import PointSetError
from src.models.geometry import Box
from src.models.pointset import PointSet

logger = logging.getLogger(__name__)


def euler_gap_set(n_terms: int) -> PointSet:
    """
    The symmetric set {+-a_n : 1 <= n <= N} with a_n = 1 + e + ... + e^(n-1)

    Gaps grow like e^n, so the set is uniformly discrete but not relatively
    dense (the declared R = 1 is nominal), while patch counts grow only
    logarithmically in the radius.
    Points are exact in the module spanned by 1, e, ..., e^(N-1).

    Args:
        n_terms: N >= 1

    Returns:
        Non-Delone PointSet
    """
    if n_terms < 1:
        raise PointSetError("N must be at least 1")
    basis = np.array([[math.e ** j] for j in range(n_terms)])
    prefix = np.tril(np.ones((n_terms, n_terms), dtype=np.int64))
    coords = np.vstack([-prefix[::-1], prefix])
    points = coords @ basis
    a_max = float(points[-1, 0])
    logger.info("generated euler gap set", extra={"n_terms": n_terms})
    return PointSet(
        points=points,
        packing_radius=1.0,
        covering_radius=1.0,
        window=Box(((-a_max, a_max),)),
        module_coords=coords,
        basis=basis,
        delone=False,
        provenance={"generator": "euler_gap_set", "N": n_terms},
    )
