"""JSON file formats for spaces, functions, ball lists and grids.

Every document carries ``"format_version": 1``.  Output is written with sorted
keys and a trailing newline so that equal content gives equal bytes.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import IoFailure
from .space import MetricMeasureSpace, build_space

FORMAT_VERSION = 1


def dumps(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(doc, path) -> None:
    try:
        Path(path).write_text(dumps(doc))
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from e


def read_json(path):
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise IoFailure(f"cannot read {path}: {e}") from e
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ValueError(f"{path} is not valid JSON: {e}") from e


def _check_version(doc, what):
    if not isinstance(doc, dict):
        raise ValueError(f"{what} document must be a JSON object")
    v = doc.get("format_version")
    if v != FORMAT_VERSION:
        raise ValueError(f"unsupported {what} format_version {v!r}")


def _floats(values):
    out = [float(v) for v in values]
    if not all(math.isfinite(v) for v in out):
        raise ValueError("non-finite value in output")
    return out


# ---------------------------------------------------------------------------
# spaces
# ---------------------------------------------------------------------------


def space_to_dict(space: MetricMeasureSpace) -> dict:
    """Euclidean metric when coordinates are known, explicit matrix otherwise."""
    points = []
    for i, pid in enumerate(space.point_ids):
        entry = {"id": pid}
        if space.coords is not None:
            entry["coords"] = _floats(space.coords[i])
        points.append(entry)
    if space.coords is not None:
        metric = {"type": "euclidean"}
    else:
        metric = {"type": "matrix", "matrix": [_floats(row) for row in space.dist]}
    return {
        "format_version": FORMAT_VERSION,
        "points": points,
        "metric": metric,
        "measure": _floats(space.mass),
    }


def space_from_dict(doc) -> MetricMeasureSpace:
    _check_version(doc, "space")
    try:
        points = doc["points"]
        ids = [str(p["id"]) for p in points]
        mass = doc["measure"]
        metric = doc["metric"]
        kind = metric["type"]
    except (KeyError, TypeError) as e:
        raise ValueError(f"malformed space document: missing {e}") from e
    if kind == "euclidean":
        try:
            coords = [p["coords"] for p in points]
        except KeyError:
            raise ValueError("euclidean metric needs coords on every point") from None
        return build_space(ids, mass, coords=np.array(coords, dtype=float).reshape(len(ids), -1))
    if kind == "matrix":
        return build_space(ids, mass, dist=metric["matrix"])
    raise ValueError(f"unknown metric type {kind!r}")


def save_space(space: MetricMeasureSpace, path) -> None:
    write_json(space_to_dict(space), path)


def load_space(path) -> MetricMeasureSpace:
    return space_from_dict(read_json(path))


# ---------------------------------------------------------------------------
# functions
# ---------------------------------------------------------------------------


def function_to_dict(values, diagnostics: dict | None = None) -> dict:
    doc = {"format_version": FORMAT_VERSION, "values": _floats(values)}
    if diagnostics is not None:
        doc["diagnostics"] = diagnostics
    return doc


def function_from_dict(doc, n: int | None = None) -> np.ndarray:
    _check_version(doc, "function")
    if "values" not in doc:
        raise ValueError("function document needs 'values'")
    v = np.array(doc["values"], dtype=float)
    if v.ndim != 1:
        raise ValueError("function values must be a flat list")
    if not np.all(np.isfinite(v)):
        raise ValueError("function values must be finite")
    if n is not None and len(v) != n:
        raise ValueError(f"function has {len(v)} values, space has {n} points")
    return v


def save_function(values, path, diagnostics: dict | None = None) -> None:
    write_json(function_to_dict(values, diagnostics), path)


def load_function(path, n: int | None = None) -> np.ndarray:
    return function_from_dict(read_json(path), n)


# ---------------------------------------------------------------------------
# ball lists
# ---------------------------------------------------------------------------


def balls_from_doc(doc) -> list:
    """``[{"center": id, "radius": r}, ...]`` (optionally wrapped as ``{"balls": [...]}``)."""
    if isinstance(doc, dict):
        doc = doc.get("balls")
    if not isinstance(doc, list):
        raise ValueError("ball list must be a JSON array")
    try:
        return [(str(b["center"]), float(b["radius"])) for b in doc]
    except (KeyError, TypeError, ValueError) as e:
        raise ValueError(f"malformed ball entry: {e}") from e


def load_balls(path) -> list:
    return balls_from_doc(read_json(path))
