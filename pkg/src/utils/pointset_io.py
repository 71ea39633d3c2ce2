import json
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np

from src.config.config import Config
from src.models.errors import FlcError, ParseError, PointSetError
from src.models.geometry import Box
from src.models.pointset import PointSet

REQUIRED_HEADERS = ("dim", "r", "R", "window")


def _columns(ps: PointSet) -> List[str]:
    names = ["x", "y"][: ps.dimension]
    if ps.weights is not None:
        names += ["w_re", "w_im"]
    if ps.colors is not None:
        names.append("color")
    if ps.module_coords is not None:
        names += [f"m{i}" for i in range(ps.module_coords.shape[1])]
    return names


def _matrix_text(matrix: np.ndarray) -> str:
    return ";".join(",".join(repr(float(v)) for v in row) for row in np.atleast_2d(matrix))


def format_pointset(ps: PointSet, metadata: Optional[Dict[str, Any]] = None) -> str:
    """
    Serialize a point set to the text format

    Args:
        ps: Point set
        metadata: Extra "# key=value" lines (tool version, seed, ...)

    Returns:
        UTF-8 text
    """
    lines = [
        f"# dim={ps.dimension}",
        f"# r={ps.packing_radius!r}",
        f"# R={ps.covering_radius!r}",
        f"# window={ps.window.to_text()}",
        f"# delone={'true' if ps.delone else 'false'}",
    ]
    if ps.module_coords is not None:
        lines.append(f"# basis={_matrix_text(ps.basis)}")
        lines.append(f"# offset={','.join(repr(float(v)) for v in ps.offset)}")
    lines.append(f"# provenance={json.dumps(ps.provenance, sort_keys=True)}")
    for key, value in (metadata or {}).items():
        lines.append(f"# {key}={value}")
    lines.append(f"# columns={','.join(_columns(ps))}")

    for i in range(len(ps)):
        row = [repr(float(v)) for v in ps.points[i]]
        if ps.weights is not None:
            row += [repr(float(ps.weights[i].real)), repr(float(ps.weights[i].imag))]
        if ps.colors is not None:
            if not ps.colors[i] or any(ch.isspace() for ch in ps.colors[i]):
                raise PointSetError(f"colour label of point {i} is empty or contains whitespace")
            row.append(ps.colors[i])
        if ps.module_coords is not None:
            row += [str(int(v)) for v in ps.module_coords[i]]
        lines.append(" ".join(row))
    return "\n".join(lines) + "\n"


def write_pointset(ps: PointSet, path: Union[str, Path], metadata: Optional[Dict[str, Any]] = None) -> None:
    Path(path).write_text(format_pointset(ps, metadata), encoding="utf-8")


def _float(text: str, line: int, row: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"row {row}: not a number: '{text}'", line)
    if not math.isfinite(value):
        raise ParseError(f"row {row}: non-finite value '{text}'", line)
    return value


def _header_float(headers: Dict[str, str], name: str) -> float:
    try:
        value = float(headers[name])
    except ValueError:
        raise ParseError(f'bad "# {name}=" header: {headers[name]}')
    if not math.isfinite(value):
        raise ParseError(f'bad "# {name}=" header: {headers[name]}')
    return value


def parse_pointset(text: str) -> PointSet:
    """
    Parse the text format back into a point set

    Args:
        text: File contents

    Returns:
        PointSet; raises ParseError with a line number on malformed input
    """
    headers: Dict[str, str] = {}
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" not in body:
                continue
            key, value = body.split("=", 1)
            headers[key.strip()] = value.strip()
        else:
            rows.append((lineno, line.split()))

    for name in REQUIRED_HEADERS:
        if name not in headers:
            raise ParseError(f'missing "# {name}=" header')
    try:
        dim = int(headers["dim"])
        window = Box.from_text(headers["window"])
    except (ValueError, FlcError) as e:
        raise ParseError(f"bad header: {e}")
    columns = headers.get("columns", ",".join(["x", "y"][:dim])).split(",")
    color_col = columns.index("color") if "color" in columns else None
    coord_cols = [i for i, c in enumerate(columns) if c.startswith("m") and c[1:].isdigit()]

    points, weights, colors, coords = [], [], [], []
    for row_index, (lineno, fields) in enumerate(rows):
        if len(fields) != len(columns):
            raise ParseError(f"row {row_index} has {len(fields)} fields, expected {len(columns)}", lineno)
        values = dict(zip(columns, fields))
        point = [_float(values[c], lineno, row_index) for c in ["x", "y"][:dim]]
        points.append(point)
        if "w_re" in values:
            weights.append(complex(_float(values["w_re"], lineno, row_index), _float(values["w_im"], lineno, row_index)))
        if color_col is not None:
            colors.append(fields[color_col])
        if coord_cols:
            try:
                coords.append([int(fields[i]) for i in coord_cols])
            except ValueError:
                raise ParseError(f"row {row_index}: module coordinates must be integers", lineno)

    basis = offset = None
    if coord_cols:
        if "basis" not in headers:
            raise ParseError('module coordinates present but "# basis=" header missing')
        try:
            basis = np.array([[float(v) for v in row.split(",")] for row in headers["basis"].split(";")])
            offset = np.array([float(v) for v in headers.get("offset", ",".join(["0"] * dim)).split(",")])
        except ValueError:
            raise ParseError('bad "# basis=" or "# offset=" header')
    try:
        provenance = json.loads(headers.get("provenance", "{}"))
    except json.JSONDecodeError as e:
        raise ParseError(f'bad "# provenance=" header: {e}')

    try:
        return PointSet(
            points=np.array(points, dtype=float).reshape(-1, dim),
            packing_radius=_header_float(headers, "r"),
            covering_radius=_header_float(headers, "R"),
            window=window,
            module_coords=np.array(coords, dtype=np.int64).reshape(len(points), len(coord_cols)) if coord_cols else None,
            basis=basis,
            offset=offset,
            weights=np.array(weights, dtype=complex) if "w_re" in columns else None,
            colors=tuple(colors) if color_col is not None else None,
            delone=headers.get("delone", "true").lower() == "true",
            provenance=provenance,
        )
    except PointSetError as e:
        raise ParseError(str(e))


def read_pointset(path: Union[str, Path]) -> PointSet:
    return parse_pointset(Path(path).read_text(encoding="utf-8"))


def default_metadata(seed: Optional[int] = None) -> Dict[str, Any]:
    return {"tool": f"{Config.TOOL_NAME} {Config.VERSION}", "seed": seed if seed is not None else ""}
