import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Tuple

import mpmath
import numpy as np
from sympy import Matrix, Rational, binomial, prevprime
from sympy.ntheory.modular import crt

from src.config.config import Config
from src.models.errors import CapacityError, ValidationError

logger = logging.getLogger(__name__)

# log2 of 24^(1/8): Bregman's bound on perfect matchings of a grid, per site
_BITS_PER_SITE = 0.573
_PRIME_BITS = 60


@dataclass(frozen=True)
class TilingCountResult:
    """
    Exact tiling count of a region with its logarithm per site

    `shape` is (m, n) for an m x n domino rectangle and (a, b, c) for a
    lozenge hexagon; `sites` is m*n or the number of lozenges ab+bc+ca.
    """
    model: str
    shape: Tuple[int, ...]
    count: int
    sites: int
    log_count_per_site: float

    @classmethod
    def from_count(cls, model: str, shape: Tuple[int, ...], count: int, sites: int) -> "TilingCountResult":
        per_site = math.log(count) / sites if count > 0 else -math.inf
        return cls(model=model, shape=tuple(shape), count=int(count), sites=sites, log_count_per_site=per_site)

    def to_dict(self) -> Dict[str, Any]:
        names = ("m", "n") if self.model == "domino" else ("a", "b", "c")
        payload: Dict[str, Any] = {"model": self.model}
        payload.update(dict(zip(names, self.shape)))
        payload["count"] = str(self.count)
        payload["log_count_per_site"] = self.log_count_per_site if self.count > 0 else None
        return payload


def _moduli(bits: float) -> List[int]:
    primes, p = [], 1 << (_PRIME_BITS + 1)
    for _ in range(int(math.ceil((bits + 2) / _PRIME_BITS))):
        p = prevprime(p)
        primes.append(int(p))
    return primes


def _cell_moves(width: int, row: int):
    states = np.arange(1 << width, dtype=np.int64)
    bit = 1 << row
    covered = states[(states & bit) != 0]
    free = states[(states & bit) == 0]
    if row + 1 < width:
        below = 1 << (row + 1)
        vertical = free[(free & below) == 0]
        vertical_dst = vertical | below
    else:
        vertical = vertical_dst = np.empty(0, dtype=np.int64)
    return covered, covered ^ bit, free, free | bit, vertical, vertical_dst


def _transfer_residues(width: int, length: int, primes: List[int]) -> List[int]:
    """
    Broken-profile transfer matrix, one residue per prime

    Bit i of a state marks the cell in row i of the current column as
    already covered by a horizontal domino from the previous column.
    """
    moduli = np.array(primes, dtype=np.uint64)[:, None]
    dp = np.zeros((len(primes), 1 << width), dtype=np.uint64)
    dp[:, 0] = 1
    moves = [_cell_moves(width, row) for row in range(width)]
    for _ in range(length):
        for covered, covered_dst, free, free_dst, vertical, vertical_dst in moves:
            new = np.zeros_like(dp)
            new[:, covered_dst] = dp[:, covered]
            new[:, free_dst] = dp[:, free]
            # vertical targets can coincide with covered targets; both are < p < 2^61
            new[:, vertical_dst] += dp[:, vertical]
            dp = np.remainder(new, moduli, out=new)
    return [int(v) for v in dp[:, 0]]


def domino_count(m: int, n: int) -> TilingCountResult:
    """
    Exact number of domino tilings of the m x n rectangle

    The transfer matrix runs over 2^width profile states along the longer
    side, modulo enough 61-bit primes to cover Bregman's upper bound, and
    the count is rebuilt by the Chinese remainder theorem.

    Args:
        m: Rows
        n: Columns

    Returns:
        TilingCountResult; odd areas give count 0
    """
    if m < 1 or n < 1:
        raise ValidationError("rectangle sides must be positive")
    width, length = min(m, n), max(m, n)
    max_width = Config.get_dimer_config()["max_width"]
    if width > max_width:
        raise CapacityError(f"transfer-matrix width {width} exceeds the limit {max_width}")
    if (m * n) % 2:
        return TilingCountResult.from_count("domino", (m, n), 0, m * n)

    primes = _moduli(_BITS_PER_SITE * m * n)
    residues = _transfer_residues(width, length, primes)
    count, _ = crt(primes, residues)
    logger.info("domino count", extra={"m": m, "n": n, "n_primes": len(primes)})
    return TilingCountResult.from_count("domino", (m, n), int(count), m * n)


def lozenge_count(a: int, b: int, c: int) -> TilingCountResult:
    """
    Exact number of lozenge tilings of the a x b x c hexagon

    Tilings are families of nonintersecting lattice paths, counted by the
    Lindstrom-Gessel-Viennot determinant det[C(b+c, b-i+j)], evaluated
    exactly with fraction-free Bareiss elimination.
    """
    if min(a, b, c) < 1:
        raise ValidationError("hexagon sides must be positive")
    limit = Config.get_dimer_config()["max_hexagon_side"]
    if max(a, b, c) > limit:
        raise CapacityError(f"hexagon side exceeds the limit {limit}")
    matrix = Matrix(a, a, lambda i, j: binomial(b + c, b - i + j))
    count = int(matrix.det(method="bareiss"))
    logger.info("lozenge count", extra={"a": a, "b": b, "c": c})
    return TilingCountResult.from_count("lozenge", (a, b, c), count, a * b + b * c + c * a)


def macmahon_lozenge_count(a: int, b: int, c: int) -> int:
    """
    Boxed plane partitions: prod_{i<=a, j<=b} (i+j+c-1)/(i+j-1)
    """
    value = Rational(1)
    for i in range(1, a + 1):
        for j in range(1, b + 1):
            value *= Rational(i + j + c - 1, i + j - 1)
    return int(value)


def kasteleyn_domino_count(m: int, n: int) -> int:
    """
    Kasteleyn's product prod (4cos^2(pi j/(m+1)) + 4cos^2(pi k/(n+1))) in high precision
    """
    digits = int(_BITS_PER_SITE * m * n * math.log10(2)) + 30
    with mpmath.workdps(digits):
        value = mpmath.mpf(1)
        for j in range(1, (m + 1) // 2 + 1):
            for k in range(1, (n + 1) // 2 + 1):
                value *= 4 * mpmath.cos(mpmath.pi * j / (m + 1)) ** 2 + 4 * mpmath.cos(mpmath.pi * k / (n + 1)) ** 2
        return int(mpmath.nint(value))
