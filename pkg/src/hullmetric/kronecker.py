import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np
from sympy import prime

from src.models.errors import ValidationError

logger = logging.getLogger(__name__)

_SCALE = 2.0 ** 64


def _to_fixed(values: np.ndarray) -> np.ndarray:
    """
    Fractional parts as uint64 fixed-point numbers (units of 2^-64)
    """
    frac = np.mod(np.asarray(values, dtype=float), 1.0)
    # 1 - 2^-53 would round up to 2^64; keep it below
    return np.minimum(np.floor(frac * _SCALE), _SCALE - 2048.0).astype(np.uint64)


def sup_circle_distance(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """
    Max over coordinates of the circle distance, for broadcastable arrays of torus points
    """
    diff = a - b
    circle = np.minimum(diff, np.uint64(0) - diff)
    return circle.max(axis=-1).astype(float) / _SCALE


@dataclass(frozen=True)
class KroneckerSystem:
    """
    Rotation x -> x + s * alpha on the k-torus

    Torus points are stored as 64-bit fixed-point fractions, so adding a
    rotation wraps exactly and the sup of coordinate circle distances is
    exactly translation invariant.
    """
    rotation_vector: np.ndarray
    # rotation invariant, so d_D = d for every D
    metric: Callable[[np.ndarray, np.ndarray], np.ndarray] = field(default=sup_circle_distance, repr=False)

    def __post_init__(self):
        vector = np.atleast_1d(np.asarray(self.rotation_vector, dtype=float))
        object.__setattr__(self, "rotation_vector", np.mod(vector, 1.0))

    @property
    def torus_dim(self) -> int:
        return len(self.rotation_vector)

    @classmethod
    def square_roots_of_primes(cls, k: int) -> "KroneckerSystem":
        return cls(np.sqrt([float(prime(i + 1)) for i in range(k)]))

    def orbit(self, n_points: int) -> np.ndarray:
        """
        j * alpha mod 1 for j = 0..n-1, computed by wrapping addition
        """
        step = _to_fixed(self.rotation_vector)
        j = np.arange(n_points, dtype=np.uint64)[:, None]
        return j * step[None, :]

    def shift(self, s: float) -> np.ndarray:
        return _to_fixed(s * self.rotation_vector)


def kronecker_entropy_demo(
    system: KroneckerSystem,
    eps: float,
    D_list: Sequence[float],
    n_points: int,
    n_shifts: Optional[int] = None,
) -> List[int]:
    """
    Greedy (D, eps)-separated set sizes on an orbit sample, one per D

    d_D is evaluated literally as the max over sampled rotation times
    s in [-D, D]; the invariant metric makes it equal to d, so the sizes
    cannot depend on D.
    """
    if not eps > 0:
        raise ValidationError("eps must be positive")
    n_shifts = n_shifts or 33
    points = system.orbit(n_points)
    sizes = []
    for D in D_list:
        shifts = np.stack([system.shift(s) for s in np.linspace(-D, D, n_shifts)])
        moved = points[:, None, :] + shifts[None, :, :]
        chosen: List[int] = []
        for i in range(n_points):
            if chosen:
                d_D = system.metric(moved[i][None, :, :], moved[chosen]).max(axis=1)
                if not np.all(d_D > eps):
                    continue
            chosen.append(i)
        sizes.append(len(chosen))
    logger.info("kronecker demo", extra={"eps": eps, "sizes": sizes})
    return sizes
