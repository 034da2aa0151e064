"""Atomic file output: JSON reports, OBJ meshes and CSV tables."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


def atomic_write_text(path, text: str) -> Path:
    """Write ``text`` to a temporary sibling, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if v != v or v in (float("inf"), float("-inf")):
            return repr(v)
        return v
    return obj


def dumps_json(obj) -> str:
    """Deterministic JSON: insertion key order, repr floats, trailing newline."""
    return json.dumps(_jsonable(obj), indent=2, allow_nan=False) + "\n"


def write_json(path, obj) -> Path:
    return atomic_write_text(path, dumps_json(obj))


def obj_text(vertices: np.ndarray, faces: Sequence[Sequence[int]] = ()) -> str:
    """Wavefront OBJ with the first three coordinates of each vertex; faces are 0-based."""
    v = np.asarray(vertices, dtype=float)
    if v.ndim != 2:
        raise ValueError("vertices must be a 2D array")
    if v.shape[1] < 3:
        v = np.hstack([v, np.zeros((v.shape[0], 3 - v.shape[1]))])
    buf = io.StringIO()
    for x, y, z in v[:, :3]:
        buf.write(f"v {x:.12g} {y:.12g} {z:.12g}\n")
    for f in faces:
        buf.write("f " + " ".join(str(i + 1) for i in f) + "\n")
    return buf.getvalue()


def grid_faces(nu: int, nv: int, mask: np.ndarray | None = None) -> list[tuple[int, int, int, int]]:
    """Quads of a row-major nu x nv vertex grid, skipping quads touching masked vertices."""
    faces = []
    for i in range(nu - 1):
        for j in range(nv - 1):
            q = (i * nv + j, (i + 1) * nv + j, (i + 1) * nv + j + 1, i * nv + j + 1)
            if mask is not None and any(mask[k] for k in q):
                continue
            faces.append(q)
    return faces


def write_obj(path, vertices, faces=()) -> Path:
    return atomic_write_text(path, obj_text(vertices, faces))


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([f"{x:.12g}" if isinstance(x, (float, np.floating)) else x for x in r])
    return buf.getvalue()


def write_csv(path, header, rows) -> Path:
    return atomic_write_text(path, csv_text(header, rows))
