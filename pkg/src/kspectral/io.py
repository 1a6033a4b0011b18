"""File formats: matrix JSON, CSV tables, SVG polylines, atomic writes."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import InputError
from .linalg import as_matrix


def matrix_to_json(a) -> dict:
    a = np.asarray(a, dtype=complex)
    return {"dim": a.shape[0], "entries": [[z.real, z.imag] for z in a.ravel()]}


def matrix_from_json(data) -> np.ndarray:
    """Parse {"dim": n, "entries": [[re, im], ...]} (row-major)."""
    if not isinstance(data, dict) or set(data) != {"dim", "entries"}:
        raise InputError('matrix JSON must have exactly the keys "dim" and "entries"')
    n = data["dim"]
    entries = data["entries"]
    if not isinstance(n, int) or n < 1:
        raise InputError("dim must be a positive integer")
    if not isinstance(entries, list) or len(entries) != n * n:
        raise InputError(f"expected {n * n} entries")
    try:
        vals = [complex(float(re), float(im)) for re, im in entries]
    except (TypeError, ValueError) as exc:
        raise InputError("entries must be [re, im] pairs") from exc
    return as_matrix(np.array(vals).reshape(n, n))


def read_json(path) -> object:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read JSON from {path}: {exc}") from exc


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_default) + "\n"


def _default(o):
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def csv_text(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in rows:
        writer.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return buf.getvalue()


def atomic_write(path, text: str, force: bool = False) -> Path:
    """Write via a temp file in the same directory, then rename."""
    path = Path(path)
    if path.exists() and not force:
        raise FileExistsError(f"{path} exists (use --force to overwrite)")
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def svg_polyline(points, markers=()) -> str:
    """Closed polyline through ``points`` with a 5% padded viewBox.

    The y axis is flipped so the picture matches the complex plane.
    """
    pts = np.asarray(points, dtype=complex)
    allpts = np.concatenate([pts, np.asarray(markers, dtype=complex)]) if len(markers) else pts
    x0, x1 = allpts.real.min(), allpts.real.max()
    y0, y1 = allpts.imag.min(), allpts.imag.max()
    span = max(x1 - x0, y1 - y0, 1e-9)
    pad = 0.05 * span
    vb = (x0 - pad, -y1 - pad, (x1 - x0) + 2 * pad, (y1 - y0) + 2 * pad)
    closed = np.concatenate([pts, pts[:1]])
    coords = " ".join(f"{z.real:.9g},{-z.imag:.9g}" for z in closed)
    stroke = 0.005 * span
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{vb[0]:.9g} {vb[1]:.9g} {vb[2]:.9g} {vb[3]:.9g}">',
        f'<polyline fill="none" stroke="black" stroke-width="{stroke:.6g}" points="{coords}"/>',
    ]
    for z in markers:
        lines.append(f'<circle cx="{z.real:.9g}" cy="{-z.imag:.9g}" r="{2 * stroke:.6g}"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
