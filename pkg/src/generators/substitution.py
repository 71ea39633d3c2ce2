import logging
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np

from src.models.errors import RuleError
from src.models.geometry import Box
from src.models.pointset import PointSet

logger = logging.getLogger(__name__)

Word = Tuple[str, ...]


def _as_word(image: Sequence[str]) -> Word:
    return tuple(image)


def substitution_matrix(alphabet: Sequence[str], images: Mapping[str, Word]) -> np.ndarray:
    """
    Entry (i, j) counts letter i in the image of letter j
    """
    index = {letter: i for i, letter in enumerate(alphabet)}
    matrix = np.zeros((len(alphabet), len(alphabet)), dtype=np.int64)
    for j, letter in enumerate(alphabet):
        for symbol in images[letter]:
            matrix[index[symbol], j] += 1
    return matrix


def is_primitive(matrix: np.ndarray) -> bool:
    """
    Some power of the matrix is strictly positive

    Only the zero pattern matters, so powers are taken on booleans up to
    Wielandt's bound (k-1)^2 + 1.
    """
    pattern = np.asarray(matrix) > 0
    k = pattern.shape[0]
    power = pattern.copy()
    for _ in range((k - 1) ** 2 + 1):
        if power.all():
            return True
        power = (power.astype(np.int64) @ pattern.astype(np.int64)) > 0
    return bool(power.all())


def perron_lengths(matrix: np.ndarray) -> Tuple[float, np.ndarray]:
    """
    Perron-Frobenius eigenvalue and positive left eigenvector (shortest entry 1)
    """
    values, vectors = np.linalg.eig(np.asarray(matrix, dtype=float).T)
    i = int(np.argmax(values.real))
    vector = np.abs(vectors[:, i].real)
    return float(values[i].real), vector / vector.min()


@dataclass(frozen=True)
class SubstitutionRule:
    """
    Primitive substitution with tile lengths and optional letter weights
    """
    alphabet: Tuple[str, ...]
    images: Dict[str, Word]
    lengths: Dict[str, float]
    weights: Optional[Dict[str, complex]] = None
    name: str = "substitution"
    _matrix: np.ndarray = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        alphabet = tuple(self.alphabet)
        images = {letter: _as_word(self.images.get(letter, ())) for letter in alphabet}
        for letter, image in images.items():
            if not image:
                raise RuleError(f"image of '{letter}' is empty")
            unknown = set(image) - set(alphabet)
            if unknown:
                raise RuleError(f"image of '{letter}' uses unknown letters {sorted(unknown)}")
        lengths = {letter: float(self.lengths[letter]) for letter in alphabet}
        if any(v <= 0 for v in lengths.values()):
            raise RuleError("tile lengths must be positive")

        matrix = substitution_matrix(alphabet, images)
        if not is_primitive(matrix):
            raise RuleError(f"substitution '{self.name}' is not primitive")
        inflation, _ = perron_lengths(matrix)
        vector = np.array([lengths[a] for a in alphabet])
        if np.max(np.abs(vector @ matrix - inflation * vector)) > 1e-9 * np.max(vector):
            raise RuleError("tile lengths are not a left Perron eigenvector of the substitution matrix")

        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "images", images)
        object.__setattr__(self, "lengths", lengths)
        if self.weights is not None:
            object.__setattr__(self, "weights", {a: complex(self.weights[a]) for a in alphabet})
        object.__setattr__(self, "_matrix", matrix)

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def inflation(self) -> float:
        return perron_lengths(self._matrix)[0]


def expand_word(rule: SubstitutionRule, iterations: int, axiom: str) -> Word:
    """
    The word substitution^iterations(axiom)
    """
    if axiom not in rule.images:
        raise RuleError(f"unknown axiom '{axiom}'")
    if iterations < 0:
        raise RuleError("iterations must be nonnegative")
    word: Word = (axiom,)
    for _ in range(iterations):
        word = tuple(symbol for letter in word for symbol in rule.images[letter])
    return word


def factor_complexity(word: Sequence[str], length: int) -> int:
    """
    Number of distinct factors of the given length
    """
    word = tuple(word)
    return len({word[i:i + length] for i in range(len(word) - length + 1)})


def substitution_chain(rule: SubstitutionRule, iterations: int, axiom: str) -> PointSet:
    """
    Left tile endpoints of substitution^iterations(axiom), laid out from 0

    Module coordinates are the letter counts of each prefix, against the
    tile lengths as generators, so patch comparison stays exact for
    irrational lengths.

    Args:
        rule: Primitive substitution rule
        iterations: Number of substitution steps
        axiom: Starting letter

    Returns:
        PointSet coloured by letter, weighted when the rule carries weights
    """
    word = expand_word(rule, iterations, axiom)
    index = {letter: i for i, letter in enumerate(rule.alphabet)}
    letters = np.array([index[a] for a in word], dtype=np.int64)
    counts = np.zeros((len(word), len(rule.alphabet)), dtype=np.int64)
    counts[np.arange(len(word)), letters] = 1
    coords = np.vstack([np.zeros((1, len(rule.alphabet)), dtype=np.int64), np.cumsum(counts, axis=0)[:-1]])
    basis = np.array([[rule.lengths[a]] for a in rule.alphabet])
    points = coords @ basis

    used = sorted(set(word), key=index.get)
    tile_lengths = [rule.lengths[a] for a in used]
    total = float(np.sum(counts.sum(axis=0) * basis[:, 0]))
    shortest = min(rule.lengths.values())
    weights = None if rule.weights is None else np.array([rule.weights[a] for a in word])
    logger.info("generated substitution chain", extra={"rule": rule.name, "iterations": iterations, "n_points": len(word)})
    return PointSet(
        points=points,
        packing_radius=min(tile_lengths) / 2.0,
        covering_radius=max(tile_lengths) / 2.0,
        window=Box(((0.0, total - shortest / 2.0),)),
        module_coords=coords,
        basis=basis,
        weights=weights,
        colors=word,
        provenance={"generator": "substitution_chain", "rule": rule.name, "iterations": iterations, "axiom": axiom},
    )


def fibonacci_rule() -> SubstitutionRule:
    golden = (1.0 + 5.0 ** 0.5) / 2.0
    return SubstitutionRule(
        alphabet=("a", "b"),
        images={"a": ("a", "b"), "b": ("a",)},
        lengths={"a": golden, "b": 1.0},
        name="fibonacci",
    )


def thue_morse_rule(weighted: bool = True) -> SubstitutionRule:
    return SubstitutionRule(
        alphabet=("a", "b"),
        images={"a": ("a", "b"), "b": ("b", "a")},
        lengths={"a": 1.0, "b": 1.0},
        weights={"a": 1.0, "b": -1.0} if weighted else None,
        name="thue_morse",
    )


def rudin_shapiro_rule(weighted: bool = True) -> SubstitutionRule:
    """
    Four-letter Rudin-Shapiro substitution; letters a, b carry +1 and c, d carry -1
    """
    return SubstitutionRule(
        alphabet=("a", "b", "c", "d"),
        images={"a": ("a", "b"), "b": ("a", "c"), "c": ("d", "b"), "d": ("d", "c")},
        lengths={"a": 1.0, "b": 1.0, "c": 1.0, "d": 1.0},
        weights={"a": 1.0, "b": 1.0, "c": -1.0, "d": -1.0} if weighted else None,
        name="rudin_shapiro",
    )


RULES = {
    "fibonacci": fibonacci_rule,
    "thue_morse": thue_morse_rule,
    "rudin_shapiro": rudin_shapiro_rule,
}
