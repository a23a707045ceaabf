"""CSV ingestion and output writers.

Dimension files are comma-separated with the grid in the header: one row of
``t`` values for curves, two rows (``u`` then ``v``, pixels flattened
column-major) for images.  Each further row is one observation.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .data import FunctionObject, RawObservations
from .errors import DimensionMismatch, ValidationError

PathLike = Union[str, Path]

CLASS_HEADERS = ("class", "label")


def fmt(x) -> str:
    """Shortest text that parses back to the same double."""
    return repr(float(x))


def _read_rows(path: PathLike) -> List[List[str]]:
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        return [row for row in csv.reader(fh) if row and any(cell.strip() for cell in row)]


def _floats(rows: Sequence[Sequence[str]], path) -> np.ndarray:
    try:
        arr = np.array([[float(cell) for cell in row] for row in rows], dtype=float)
    except ValueError as exc:
        raise ValidationError(f"{path}: non-numeric entry ({exc})") from exc
    if arr.ndim != 2:
        raise ValidationError(f"{path}: rows have different lengths")
    return arr


def read_dimension(path: PathLike, ndim: int = 1) -> Tuple[np.ndarray, np.ndarray]:
    """Grid and ``n x N`` value matrix of one dimension file."""
    if ndim not in (1, 2):
        raise ValidationError("only 1-D and 2-D domains are supported")
    rows = _read_rows(path)
    if len(rows) <= ndim:
        raise ValidationError(f"{path}: needs {ndim} header row(s) and at least one observation")
    arr = _floats(rows, path)
    grid = arr[0] if ndim == 1 else arr[:2].T
    return grid, arr[ndim:]


def read_observations(paths: Sequence[PathLike], ndims: Sequence[int]) -> RawObservations:
    if len(paths) != len(ndims):
        raise DimensionMismatch("one domain dimension is needed per file")
    grids, values = zip(*(read_dimension(p, k) for p, k in zip(paths, ndims)))
    n = {v.shape[0] for v in values}
    if len(n) != 1:
        raise DimensionMismatch("dimension files hold different numbers of observations")
    return RawObservations(grids, values)


def read_response(path: PathLike) -> Tuple[np.ndarray, str]:
    """Response vector and task; a ``class`` or ``label`` header means classification."""
    rows = _read_rows(path)
    if len(rows) < 2 or any(len(r) != 1 for r in rows):
        raise ValidationError(f"{path}: expected a single-column CSV with a header")
    header = rows[0][0].strip().lower()
    y = _floats(rows[1:], path).reshape(-1)
    if header in CLASS_HEADERS:
        if not np.all((y == 0) | (y == 1)):
            raise ValidationError(f"{path}: class labels must be 0 or 1")
        return y.astype(int), "classification"
    return y, "regression"


def write_dimension(path: PathLike, grid, values) -> None:
    grid = np.asarray(grid, dtype=float)
    header = [grid] if grid.ndim == 1 else [grid[:, 0], grid[:, 1]]
    write_rows(path, None, [list(map(fmt, h)) for h in header] + [list(map(fmt, row)) for row in np.asarray(values)])


def write_response(path: PathLike, y, task: str) -> None:
    header = "class" if task == "classification" else "y"
    cells = [str(int(v)) for v in y] if task == "classification" else [fmt(v) for v in y]
    write_rows(path, [header], [[c] for c in cells])


def write_rows(path: PathLike, header: Optional[Sequence[str]], rows: Iterable[Sequence]) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if header is not None:
            writer.writerow(header)
        writer.writerows(rows)


def write_json(path: PathLike, payload) -> None:
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=1, allow_nan=True) + "\n", encoding="utf-8")


def write_predictions(path: PathLike, gamma=None, predicted=None, values=None) -> None:
    """Classification: ``id, gamma, predicted_class``; regression: ``id, prediction``."""
    if values is not None:
        write_rows(path, ["id", "prediction"], [[i, fmt(v)] for i, v in enumerate(values)])
    else:
        write_rows(path, ["id", "gamma", "predicted_class"],
                   [[i, fmt(g), int(c)] for i, (g, c) in enumerate(zip(gamma, predicted))])


def beta_rows(beta: FunctionObject, grids, dims: Optional[Sequence[int]] = None) -> List[list]:
    """Plot-ready rows ``(dimension, t, value)`` or ``(dimension, u, v, value)``; dimensions 1-based."""
    dims = range(len(beta.bases)) if dims is None else dims
    rows = []
    for k, (j, grid) in enumerate(zip(dims, grids)):
        grid = np.asarray(grid, dtype=float)
        vals = beta.evaluate(k, grid)
        if grid.ndim == 1:
            rows.extend([j + 1, fmt(t), "", fmt(v)] for t, v in zip(grid, vals))
        else:
            rows.extend([j + 1, fmt(p[0]), fmt(p[1]), fmt(v)] for p, v in zip(grid, vals))
    return rows


def write_beta(path: PathLike, beta: FunctionObject, grids, dims=None) -> None:
    write_rows(path, ["dimension", "t_or_u", "v", "value"], beta_rows(beta, grids, dims))
