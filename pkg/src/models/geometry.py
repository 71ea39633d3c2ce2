import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from src.models.errors import WindowError


@dataclass(frozen=True)
class Box:
    """
    Axis-aligned box, one closed interval per axis
    """
    bounds: Tuple[Tuple[float, float], ...]

    def __post_init__(self):
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        for lo, hi in bounds:
            if not (math.isfinite(lo) and math.isfinite(hi)) or hi < lo:
                raise WindowError(f"invalid box interval [{lo}, {hi}]")
        object.__setattr__(self, "bounds", bounds)

    @classmethod
    def cube(cls, half_width: float, dimension: int, center: Optional[Sequence[float]] = None) -> "Box":
        center = [0.0] * dimension if center is None else list(center)
        return cls(tuple((c - half_width, c + half_width) for c in center))

    @property
    def dimension(self) -> int:
        return len(self.bounds)

    @property
    def lower(self) -> np.ndarray:
        return np.array([lo for lo, _ in self.bounds])

    @property
    def upper(self) -> np.ndarray:
        return np.array([hi for _, hi in self.bounds])

    @property
    def extents(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    @property
    def volume(self) -> float:
        return float(np.prod(self.extents))

    def erode(self, by: float) -> Optional["Box"]:
        """
        Shrink every interval by `by` on both sides; None when nothing is left
        """
        out = []
        for lo, hi in self.bounds:
            if hi - lo < 2 * by:
                return None
            out.append((lo + by, hi - by))
        return Box(tuple(out))

    def shift(self, x: Sequence[float]) -> "Box":
        return Box(tuple((lo + float(v), hi + float(v)) for (lo, hi), v in zip(self.bounds, x)))

    def intersect(self, other: "Box") -> Optional["Box"]:
        out = []
        for (a, b), (c, d) in zip(self.bounds, other.bounds):
            lo, hi = max(a, c), min(b, d)
            if hi < lo:
                return None
            out.append((lo, hi))
        return Box(tuple(out))

    def contains_box(self, other: "Box", tol: float = 0.0) -> bool:
        return all(c >= a - tol and d <= b + tol for (a, b), (c, d) in zip(self.bounds, other.bounds))

    def contains(self, points: np.ndarray, tol: float = 0.0) -> np.ndarray:
        """
        Boolean mask of the rows of `points` lying in the box
        """
        points = np.asarray(points, dtype=float).reshape(-1, self.dimension)
        return np.all((points >= self.lower - tol) & (points <= self.upper + tol), axis=1)

    def inner_radius(self, x: Sequence[float]) -> float:
        """
        Radius of the largest closed ball around x contained in the box
        """
        x = np.asarray(x, dtype=float)
        return float(np.min(np.minimum(x - self.lower, self.upper - x)))

    def to_text(self) -> str:
        return ";".join(f"{lo!r},{hi!r}" for lo, hi in self.bounds)

    @classmethod
    def from_text(cls, text: str) -> "Box":
        parts = [p for p in text.strip().split(";") if p.strip()]
        try:
            bounds = tuple(tuple(float(v) for v in part.split(",")) for part in parts)
        except ValueError as e:
            raise WindowError(f"malformed window '{text}': {e}")
        if not bounds or any(len(b) != 2 for b in bounds):
            raise WindowError(f"malformed window '{text}'")
        return cls(bounds)


@dataclass(frozen=True)
class BallQuery:
    center: Tuple[float, ...]
    radius: float

    def __post_init__(self):
        if not self.radius >= 0:
            raise WindowError("ball radius must be nonnegative")
        object.__setattr__(self, "center", tuple(float(c) for c in np.atleast_1d(self.center)))


@dataclass(frozen=True)
class DeloneReport:
    uniformly_discrete: bool
    relatively_dense: bool
    min_gap: float
    max_hole: float
    hole_center: Optional[Tuple[float, ...]] = None
    exhaustive: bool = True


def ball_volume(radius: float, dimension: int) -> float:
    """
    Volume of the closed Euclidean ball of given radius in R^1 or R^2
    """
    if dimension == 1:
        return 2.0 * radius
    if dimension == 2:
        return math.pi * radius * radius
    return math.pi ** (dimension / 2) / math.gamma(dimension / 2 + 1) * radius ** dimension
