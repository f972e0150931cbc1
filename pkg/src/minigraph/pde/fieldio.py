"""Text files holding height fields.

Layout::

    # minigraph field
    space hyperbolic
    n 2
    h 0.015625
    origin -1.03125 0.96875
    dims 70 70
    scale 1.0
    delta 0.05
    cap 256.0            (or "none")
    residual 3.1e-10
    converged true
    iterations 5
    max_gradient 12.5
    nodes 4096
    i j class value      (one record per non-exterior node)

Reals are written with ``repr`` (shortest round-trip decimal), so reading a
file back reproduces every value bit for bit.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from ..errors import UsageError
from ..raster import CLASS_NAMES, COLLAR, DIRICHLET, EXTERIOR, RasterizedDomain
from .solver import HeightField

_CLASS_IDS = {v: k for k, v in CLASS_NAMES.items()}
MAGIC = "# minigraph field"


def _real(x) -> str:
    return repr(float(x))


def format_field(field: HeightField) -> str:
    r = field.raster
    lines = [
        MAGIC,
        f"space {r.space}",
        f"n {r.n}",
        f"h {_real(r.h)}",
        "origin " + " ".join(_real(v) for v in r.origin),
        "dims " + " ".join(str(int(d)) for d in r.dims),
        f"scale {_real(r.scale)}",
        f"delta {_real(r.delta)}",
        f"cap {'none' if field.cap is None else _real(field.cap)}",
        f"residual {_real(field.residual_norm)}",
        f"converged {'true' if field.converged else 'false'}",
        f"iterations {int(field.iterations)}",
        f"max_gradient {_real(field.max_gradient)}",
    ]
    idx = np.argwhere(r.node_class != EXTERIOR)
    lines.append(f"nodes {len(idx)}")
    for ii in idx:
        key = tuple(ii)
        cls = CLASS_NAMES[int(r.node_class[key])]
        lines.append(" ".join(str(int(v)) for v in ii) + f" {cls} {_real(field.u[key])}")
    return "\n".join(lines) + "\n"


def write_field(field: HeightField, path) -> Path:
    path = Path(path)
    path.write_text(format_field(field))
    return path


def parse_field(text: str) -> HeightField:
    """Inverse of :func:`format_field`.

    The raster is rebuilt from the records: Dirichlet nodes take their value
    as data, collar nodes their sign relative to the cap.

    Raises
    ------
    UsageError
        Malformed header or records.
    """
    lines = [ln.strip() for ln in text.splitlines()]
    if not lines or lines[0] != MAGIC:
        raise UsageError("not a minigraph field file")
    head = {}
    pos = 1
    try:
        while pos < len(lines):
            key, _, rest = lines[pos].partition(" ")
            pos += 1
            head[key] = rest.strip()
            if key == "nodes":
                break
        n = int(head["n"])
        space = head["space"]
        h = float(head["h"])
        origin = np.array([float(v) for v in head["origin"].split()])
        dims = tuple(int(v) for v in head["dims"].split())
        scale = float(head["scale"])
        delta = float(head["delta"])
        cap = None if head["cap"] == "none" else float(head["cap"])
        count = int(head["nodes"])
    except (KeyError, ValueError) as exc:
        raise UsageError(f"bad field header: {exc}") from exc
    if len(origin) != n or len(dims) != n or space not in ("hyperbolic", "euclidean"):
        raise UsageError("inconsistent field header")
    node_class = np.zeros(dims, dtype=np.int8)
    u = np.full(dims, np.nan)
    records = [ln for ln in lines[pos:] if ln]
    if len(records) != count:
        raise UsageError(f"expected {count} node records, found {len(records)}")
    for ln in records:
        parts = ln.split()
        if len(parts) != n + 2 or parts[n] not in _CLASS_IDS:
            raise UsageError(f"bad node record: {ln!r}")
        try:
            key = tuple(int(v) for v in parts[:n])
            val = float(parts[n + 1])
        except ValueError as exc:
            raise UsageError(f"bad node record: {ln!r}") from exc
        if any(k < 0 or k >= d for k, d in zip(key, dims)):
            raise UsageError(f"node index out of range: {ln!r}")
        node_class[key] = _CLASS_IDS[parts[n]]
        u[key] = val
    values = np.where(node_class == DIRICHLET, u, np.nan)
    collar = node_class == COLLAR
    sign = np.zeros(dims, dtype=np.int8)
    if collar.any():
        sign[collar] = np.sign(np.nan_to_num(u[collar])).astype(np.int8)
    raster = RasterizedDomain(space=space, n=n, h=h, origin=origin, dims=dims, node_class=node_class,
                              values=values, collar_sign=sign, owner=np.full(dims, -1, np.int32),
                              inf_distance=np.full(dims, np.inf), snapped={}, scale=scale, delta=delta)
    return HeightField(raster, u, float(head.get("residual", "nan")), head.get("converged", "true") == "true",
                       int(head.get("iterations", "0")), [], cap, float(head.get("max_gradient", "nan")))


def read_field(path) -> HeightField:
    path = Path(path)
    if not path.exists():
        raise UsageError(f"field file not found: {path}")
    return parse_field(path.read_text())


def fields_equal(a: HeightField, b: HeightField) -> bool:
    """Bitwise equality of layouts and node values (NaN at exterior nodes)."""
    return (a.raster.dims == b.raster.dims and np.array_equal(a.raster.node_class, b.raster.node_class)
            and np.array_equal(a.u, b.u, equal_nan=True) and math.isclose(a.raster.h, b.raster.h, rel_tol=0.0))
