import hashlib
import logging
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from src.config.config import Config
from src.core.geometry import build_index
from src.models.errors import ValidationError, WindowTooSmallError
from src.models.pointset import PointSet

logger = logging.getLogger(__name__)

_BOUNDARY_TOL = 1e-12
_WEIGHT_GRID = 1e-9


@dataclass(frozen=True, eq=False)
class Patch:
    """
    A D-patch translated so that its centre sits at the origin
    """
    radius: float
    points: np.ndarray
    canonical_key: bytes
    colors: Optional[Tuple[str, ...]] = None
    weights: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return self.points.shape[0]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Patch) and self.canonical_key == other.canonical_key

    def __hash__(self) -> int:
        return hash(self.canonical_key)


@dataclass(frozen=True)
class PatchEntry:
    """
    One distinct patch; the patch itself is rebuilt from its first
    occurrence on first access
    """
    key: bytes
    count: int
    first_center: Tuple[float, ...]
    first_index: int
    radius: float
    context: "_PatchContext" = field(repr=False, compare=False)

    @cached_property
    def patch(self) -> Patch:
        return self.context.build_patch(self.first_index, self.radius, self.key)


@dataclass
class PatchTable:
    """
    Distinct D-patches of a sample with occurrence counts

    `center_indices` lists the admissible centres (rows of the point set)
    and `center_labels` gives, for each of them, the position of its patch
    in `entries`.
    """
    radius: float
    entries: Dict[bytes, PatchEntry]
    n_centers: int
    center_indices: np.ndarray = field(repr=False)
    center_labels: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.entries)

    def keys(self) -> List[bytes]:
        return list(self.entries)

    def occurrences(self, label: int) -> np.ndarray:
        """
        Point-set rows at which the patch with the given label occurs
        """
        return self.center_indices[self.center_labels == label]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "D": self.radius,
            "n_centers": self.n_centers,
            "patches": [
                {
                    "key": key.hex(),
                    "count": entry.count,
                    "first_center": list(entry.first_center),
                    "points": entry.patch.points.tolist(),
                    **({"colors": list(entry.patch.colors)} if entry.patch.colors is not None else {}),
                }
                for key, entry in self.entries.items()
            ],
        }


class _PatchContext:
    """
    Integer view of a point set used for exact patch comparison

    Module coordinates are used when present; otherwise coordinates are
    quantized to the configured grid. Relative positions are always
    rebuilt from integer differences, so equal patches produce equal
    floats wherever they occur.
    """

    def __init__(self, ps: PointSet):
        self.ps = ps
        self.index = build_index(ps)
        if ps.has_module_coords:
            self.coords = np.asarray(ps.module_coords, dtype=np.int64)
            self.basis = np.asarray(ps.basis, dtype=float)
        else:
            grid = Config.get_geometry_config()["quantization_grid"]
            self.coords = np.round(ps.points / grid).astype(np.int64)
            self.basis = grid * np.eye(ps.dimension)

        extras = []
        if ps.colors is not None:
            extras.append(np.array([zlib.crc32(c.encode("utf-8")) for c in ps.colors], dtype=np.int64)[:, None])
        if ps.weights is not None:
            w = np.asarray(ps.weights)
            extras.append(np.column_stack([np.round(w.real / _WEIGHT_GRID), np.round(w.imag / _WEIGHT_GRID)]).astype(np.int64))
        self.extras = np.hstack(extras) if extras else None

    def neighbourhood_rows(self, centers: np.ndarray, radius: float):
        """
        Sorted key rows (relative integer coordinates, then colour and weight
        codes) of every centre's D-patch

        Returns:
            (owner, neighbour, rows), grouped by owner with rows sorted
            lexicographically inside each group
        """
        owner, neighbour = self.index.ball_candidates(self.ps.points[centers], radius)
        rel = self.coords[neighbour] - self.coords[centers[owner]]
        pos = rel @ self.basis
        inside = np.einsum("ij,ij->i", pos, pos) <= (radius + _BOUNDARY_TOL) ** 2
        owner, neighbour, rel = owner[inside], neighbour[inside], rel[inside]
        rows = rel if self.extras is None else np.hstack([rel, self.extras[neighbour]])
        order = np.lexsort(tuple(rows[:, k] for k in reversed(range(rows.shape[1]))) + (owner,))
        return owner[order], neighbour[order], rows[order]

    def build_patch(self, center: int, radius: float, key: bytes) -> Patch:
        owner, neighbour, rows = self.neighbourhood_rows(np.array([center]), radius)
        rel = rows[:, : self.coords.shape[1]]
        colors = None if self.ps.colors is None else tuple(self.ps.colors[i] for i in neighbour)
        weights = None if self.ps.weights is None else np.asarray(self.ps.weights)[neighbour]
        return Patch(radius=radius, points=rel @ self.basis, canonical_key=key, colors=colors, weights=weights)


def _chunk_keys(ctx: _PatchContext, centers: np.ndarray, radius: float):
    owner, _, rows = ctx.neighbourhood_rows(centers, radius)
    sizes = np.bincount(owner, minlength=len(centers))
    starts = np.concatenate(([0], np.cumsum(sizes)[:-1]))
    width = rows.shape[1]

    keys: List[bytes] = []
    representatives: List[int] = []
    labels = np.empty(len(centers), dtype=np.int64)
    # patches of different sizes never coincide, so group by size and
    # deduplicate each group as fixed-width integer rows
    for size in np.unique(sizes):
        members = np.nonzero(sizes == size)[0]
        idx = starts[members][:, None] + np.arange(size)
        block = rows[idx].reshape(len(members), size * width)
        unique, first, inverse = np.unique(block, axis=0, return_index=True, return_inverse=True)
        base = len(keys)
        keys.extend(np.ascontiguousarray(row).tobytes() for row in unique)
        representatives.extend(int(centers[members[i]]) for i in first)
        labels[members] = base + np.asarray(inverse).reshape(-1)
    return keys, representatives, labels


def admissible_centers(ps: PointSet, radius: float) -> np.ndarray:
    """
    Rows x of the point set with B_radius(x) inside the window, in
    lexicographic coordinate order
    """
    eroded = ps.window.erode(radius)
    if eroded is None:
        raise WindowTooSmallError("radius exceeds sample")
    rows = np.nonzero(eroded.contains(ps.points, _BOUNDARY_TOL))[0]
    order = np.lexsort(ps.points[rows].T[::-1])
    return rows[order]


def _scan(ps: PointSet, D: float, threads: Optional[int], work: Callable[["_PatchContext", np.ndarray, float], Any]):
    if not D > 0:
        raise ValidationError("patch radius must be positive")
    centers = admissible_centers(ps, D)
    ctx = _PatchContext(ps)
    chunk = Config.get_patch_config()["chunk_size"]
    threads = threads or Config.get_runtime_config()["threads"]
    chunks = [centers[i:i + chunk] for i in range(0, len(centers), chunk)]

    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda c: work(ctx, c, D), chunks))
    else:
        results = [work(ctx, c, D) for c in chunks]
    return ctx, centers, results


def extract_patches(ps: PointSet, D: float, threads: Optional[int] = None) -> PatchTable:
    """
    Deduplicated D-patches around every admissible centre

    Args:
        ps: Point set
        D: Patch radius
        threads: Worker threads for the chunked scan (config default)

    Returns:
        PatchTable with entries ordered by canonical key
    """
    ctx, centers, results = _scan(ps, D, threads, _chunk_keys)

    # merge in chunk order so the first occurrence is the lexicographically smallest centre
    key_ids: Dict[bytes, int] = {}
    first_rows: List[int] = []
    labels = []
    for keys, representatives, local in results:
        mapping = np.empty(len(keys), dtype=np.int64)
        for i, (key, rep) in enumerate(zip(keys, representatives)):
            if key not in key_ids:
                key_ids[key] = len(first_rows)
                first_rows.append(rep)
            mapping[i] = key_ids[key]
        labels.append(mapping[local])
    labels = np.concatenate(labels) if labels else np.empty(0, dtype=np.int64)

    ordered = sorted(key_ids)
    relabel = np.empty(len(ordered), dtype=np.int64)
    for position, key in enumerate(ordered):
        relabel[key_ids[key]] = position
    labels = relabel[labels] if len(labels) else labels
    counts = np.bincount(labels, minlength=len(ordered))

    entries: Dict[bytes, PatchEntry] = {}
    for position, key in enumerate(ordered):
        row = first_rows[key_ids[key]]
        entries[key] = PatchEntry(
            key=key,
            count=int(counts[position]),
            first_center=tuple(float(v) for v in ps.points[row]),
            first_index=row,
            radius=D,
            context=ctx,
        )
    logger.info("extracted patches", extra={"D": D, "n_centers": len(centers), "n_patches": len(entries)})
    return PatchTable(radius=D, entries=entries, n_centers=len(centers), center_indices=centers, center_labels=labels)


def _chunk_digests(ctx: _PatchContext, centers: np.ndarray, radius: float) -> np.ndarray:
    keys, _, _ = _chunk_keys(ctx, centers, radius)
    raw = b"".join(hashlib.blake2b(key, digest_size=16).digest() for key in keys)
    return np.frombuffer(raw, dtype=np.uint64).reshape(-1, 2)


def patch_count(ps: PointSet, D: float, threads: Optional[int] = None) -> int:
    """
    Number of distinct D-patches, card p(D)

    Only 128-bit BLAKE2 digests of the canonical keys are merged across
    chunks and no Patch is built, so memory stays proportional to the
    number of distinct patches times 16 bytes.
    """
    _, centers, results = _scan(ps, D, threads, _chunk_digests)
    if not results:
        return 0
    count = len(np.unique(np.concatenate(results), axis=0))
    logger.debug("counted patches", extra={"D": D, "n_centers": len(centers), "n_patches": count})
    return count
