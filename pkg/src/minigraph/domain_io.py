"""Line-oriented text format for domains with boundary data.

Example::

    # comments start with '#'
    space hyperbolic n=2
    shape polyhedron vertices=-0.5,1.0;0.5,1.0;0.0,1.8
    clip plane=vertical:1.0:0.0 keep=0.25,1.2
    piece 0 data=+inf
    piece 1 data=0.0
    piece 2 data=linear:0.0,1.0,0.5
    piece 3 data=file:samples.txt

Shape stanzas (``key=value`` fields, points separated by ``;``)::

    ball center=<pt> radius=<r>
    box lo=<pt> hi=<pt>
    polyhedron vertices=<pt>;...;<pt>
    rotational axis=<pt> A0=<pt> A1=<pt> B=<pt>
    halfspace_trunc plane=<plane> rho=<r> marker=<pt> lo=<pt> hi=<pt>
    exterior rho0=<r> lo=<pt> hi=<pt> [t=<r>] [center=<pt>]
    scherk2 A0=<pt> lengths=<list> k=<int>

Planes are ``vertical:<normal>:<offset>``, ``hemisphere:<center>:<radius>``
or, in Euclidean space, ``affine:<normal>:<offset>``.  Data is a real,
``+inf``, ``-inf``, ``linear:a0,a1,...,an`` (``a0 + sum a_i x_i``) or
``file:<path>`` (rows ``x_1 ... x_n value``, path relative to the domain
file).  Reals are written with ``repr`` so a write/read cycle is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import domains as D
from .domains import BoundaryData, DomainSpec, EuclideanHyperplane
from .errors import UsageError
from .geometry import GeodesicHyperplane


@dataclass(frozen=True, eq=False)
class AffineFunction:
    """``a0 + a . x`` evaluated row-wise."""

    coeffs: tuple

    def __call__(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        c = np.asarray(self.coeffs, dtype=float)
        if x.shape[1] != c.size - 1:
            raise UsageError("linear data has the wrong number of coefficients")
        return c[0] + x @ c[1:]


def linear_data(coeffs) -> BoundaryData:
    return BoundaryData.function(AffineFunction(tuple(float(c) for c in coeffs)))


def vertex_interpolant(vertices, values) -> BoundaryData:
    """Affine data taking ``values`` at the ``n+1`` ``vertices`` (coordinate-wise interpolation)."""
    v = np.asarray(vertices, dtype=float)
    m = np.hstack([np.ones((len(v), 1)), v])
    if m.shape[0] != m.shape[1]:
        raise UsageError("vertex interpolation needs n+1 vertices")
    return linear_data(np.linalg.solve(m, np.asarray(values, dtype=float)))


# -- formatting -----------------------------------------------------------------------


def _r(x) -> str:
    return repr(float(x))


def _pt(p) -> str:
    return ",".join(_r(v) for v in np.atleast_1d(p))


def _pts(ps) -> str:
    return ";".join(_pt(p) for p in ps)


def _plane(pl) -> str:
    if isinstance(pl, EuclideanHyperplane):
        return f"affine:{_pt(pl.normal)}:{_r(pl.offset)}"
    if pl.kind == "vertical":
        return f"vertical:{_pt(pl.normal)}:{_r(pl.offset)}"
    return f"hemisphere:{_pt(pl.center)}:{_r(pl.radius)}"


def _data(d: BoundaryData | None) -> str:
    if d is None:
        raise UsageError("piece without data cannot be written")
    if d.kind == "const":
        return _r(d.value)
    if d.infinite:
        return "+inf" if d.sign > 0 else "-inf"
    if d.kind == "function" and isinstance(d.func, AffineFunction):
        return "linear:" + ",".join(_r(c) for c in d.func.coeffs)
    if d.kind == "samples" and d.source:
        return f"file:{d.source}"
    raise UsageError(f"boundary data of kind {d.kind!r} has no text form")


def _shape_lines(shape) -> list[str]:
    p = shape.params
    k = shape.kind
    if k == "clipped":
        return _shape_lines(p["base"]) + [f"clip plane={_plane(p['plane'])} keep={_pt(p['keep'])}"]
    if k == "ball":
        return [f"shape ball center={_pt(p['center'])} radius={_r(p['radius'])}"]
    if k == "box":
        return [f"shape box lo={_pt(p['lo'])} hi={_pt(p['hi'])}"]
    if k == "polyhedron":
        return [f"shape polyhedron vertices={_pts(p['vertices'])}"]
    if k == "rotational":
        return [f"shape rotational axis={_pt(p['axis'])} A0={_pt(p['A0'])} A1={_pt(p['A1'])} B={_pt(p['B'])}"]
    if k == "halfspace_trunc":
        return [f"shape halfspace_trunc plane={_plane(p['plane'])} rho={_r(p['rho'])} "
                f"marker={_pt(p['marker'])} lo={_pt(p['lo'])} hi={_pt(p['hi'])}"]
    if k == "exterior":
        return [f"shape exterior rho0={_r(p['rho0'])} lo={_pt(p['lo'])} hi={_pt(p['hi'])} "
                f"t={_r(p['t'])} center={_pt(p['center'])}"]
    if k == "scherk2":
        return [f"shape scherk2 A0={_pt(p['A0'])} lengths={_pt(p['lengths'])} k={int(p['k'])}"]
    raise UsageError(f"shape kind {k!r} has no text form")


def format_domain(spec: DomainSpec) -> str:
    lines = [f"space {spec.space} n={spec.n}"] + _shape_lines(spec.shape)
    for piece in spec.pieces:
        lines.append(f"piece {piece.id} data={_data(piece.data)}")
    return "\n".join(lines) + "\n"


def write_domain(spec: DomainSpec, path) -> Path:
    path = Path(path)
    path.write_text(format_domain(spec))
    return path


# -- parsing ----------------------------------------------------------------------------


def _real(s: str) -> float:
    try:
        v = float(s)
    except ValueError as exc:
        raise UsageError(f"not a real number: {s!r}") from exc
    if not math.isfinite(v):
        raise UsageError(f"not a finite real number: {s!r}")
    return v


def _point(s: str, n: int | None = None) -> np.ndarray:
    p = np.array([_real(v) for v in s.split(",")])
    if n is not None and p.size != n:
        raise UsageError(f"expected {n} coordinates in {s!r}")
    return p


def _points(s: str, n: int) -> np.ndarray:
    return np.array([_point(part, n) for part in s.split(";")])


def _parse_plane(s: str, space: str, n: int):
    parts = s.split(":")
    if len(parts) != 3:
        raise UsageError(f"bad plane {s!r}")
    kind, a, b = parts
    if kind == "affine" and space == "euclidean":
        normal = _point(a, n)
        norm = np.linalg.norm(normal)
        if norm == 0:
            raise UsageError("zero plane normal")
        if abs(norm - 1.0) <= 1e-14:
            # already unit length as written; renormalizing would break exact round trips
            norm = 1.0
        return EuclideanHyperplane(normal / norm, _real(b) / norm)
    if space != "hyperbolic":
        raise UsageError(f"plane kind {kind!r} needs hyperbolic space")
    if kind == "vertical":
        return GeodesicHyperplane.vertical(_point(a, n - 1), _real(b))
    if kind == "hemisphere":
        return GeodesicHyperplane.hemisphere(_point(a, n - 1), _real(b))
    raise UsageError(f"unknown plane kind {kind!r}")


def parse_plane(text: str, space: str = "hyperbolic", n: int = 2):
    """Plane from ``vertical:<normal>:<offset>``, ``hemisphere:<center>:<radius>`` or ``affine:<normal>:<offset>``."""
    return _parse_plane(text.strip(), space, n)


def _fields(tokens, required, optional=()) -> dict:
    out = {}
    for tok in tokens:
        key, eq, val = tok.partition("=")
        if not eq or not val:
            raise UsageError(f"expected key=value, got {tok!r}")
        if key not in required and key not in optional:
            raise UsageError(f"unknown field {key!r}")
        if key in out:
            raise UsageError(f"duplicate field {key!r}")
        out[key] = val
    missing = [k for k in required if k not in out]
    if missing:
        raise UsageError(f"missing field(s): {', '.join(missing)}")
    return out


def _build_shape(tokens, space: str, n: int) -> DomainSpec:
    if not tokens:
        raise UsageError("empty shape stanza")
    kind, rest = tokens[0], tokens[1:]
    if kind == "ball":
        f = _fields(rest, ("center", "radius"))
        return D.make_ball(_point(f["center"], n), _real(f["radius"]), space)
    if kind == "box":
        f = _fields(rest, ("lo", "hi"))
        return D.make_box(_point(f["lo"], n), _point(f["hi"], n), space)
    if kind == "polyhedron":
        f = _fields(rest, ("vertices",))
        return D.make_admissible_polyhedron(_points(f["vertices"], n), space)
    if kind == "rotational":
        f = _fields(rest, ("axis", "A0", "A1", "B"))
        if space != "hyperbolic":
            raise UsageError("rotational domains are hyperbolic")
        return D.make_rotational_domain(_point(f["axis"], n - 1), _point(f["A0"], n), _point(f["A1"], n),
                                        _point(f["B"], n))
    if kind == "halfspace_trunc":
        f = _fields(rest, ("plane", "rho", "marker", "lo", "hi"))
        return D.make_halfspace_trunc(_parse_plane(f["plane"], space, n), _real(f["rho"]),
                                      _point(f["marker"], n), _point(f["lo"], n), _point(f["hi"], n))
    if kind == "exterior":
        f = _fields(rest, ("rho0", "lo", "hi"), ("t", "center"))
        center = _point(f["center"], n) if "center" in f else None
        return D.exterior_domain_canonical(_real(f["rho0"]), _point(f["lo"], n), _point(f["hi"], n),
                                           _real(f.get("t", "0.0")), center)
    if kind == "scherk2":
        f = _fields(rest, ("A0", "lengths", "k"))
        try:
            k = int(f["k"])
        except ValueError as exc:
            raise UsageError(f"bad k {f['k']!r}") from exc
        return D.build_second_scherk_polyhedron(_point(f["A0"], n), list(_point(f["lengths"], n)), k, n, space)
    raise UsageError(f"unknown shape kind {kind!r}")


def _parse_data(s: str, n: int, base: Path | None) -> BoundaryData:
    if s == "+inf":
        return BoundaryData.inf(1)
    if s == "-inf":
        return BoundaryData.inf(-1)
    if s.startswith("linear:"):
        c = _point(s[len("linear:"):], n + 1)
        return linear_data(c)
    if s.startswith("file:"):
        name = s[len("file:"):]
        path = Path(name) if base is None else base / name
        if not path.exists():
            raise UsageError(f"data file not found: {path}")
        try:
            arr = np.loadtxt(path, ndmin=2)
        except ValueError as exc:
            raise UsageError(f"unreadable data file {path}: {exc}") from exc
        if arr.shape[1] != n + 1 or not np.all(np.isfinite(arr)):
            raise UsageError(f"data file {path} needs {n + 1} finite columns")
        return BoundaryData.samples(arr[:, :n], arr[:, n], source=name)
    return BoundaryData.const(_real(s))


def parse_domain(text: str, base_dir=None) -> DomainSpec:
    """Parse the text format into a :class:`DomainSpec` with data attached.

    Raises
    ------
    UsageError
        Any syntax error, unknown keyword, missing data or invalid geometry.
    """
    base = None if base_dir is None else Path(base_dir)
    space = n = None
    spec = None
    data = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            if tokens[0] == "space":
                if space is not None or len(tokens) != 3 or not tokens[2].startswith("n="):
                    raise UsageError("expected 'space <hyperbolic|euclidean> n=<int>' once")
                space = tokens[1]
                if space not in ("hyperbolic", "euclidean"):
                    raise UsageError(f"unknown space {space!r}")
                try:
                    n = int(tokens[2][2:])
                except ValueError as exc:
                    raise UsageError(f"bad dimension {tokens[2]!r}") from exc
                if n < 2:
                    raise UsageError("dimension must be at least 2")
            elif tokens[0] == "shape":
                if space is None:
                    raise UsageError("the space line must come first")
                if spec is not None:
                    raise UsageError("only one shape stanza is allowed")
                spec = _build_shape(tokens[1:], space, n)
            elif tokens[0] == "clip":
                if spec is None:
                    raise UsageError("clip needs a preceding shape")
                f = _fields(tokens[1:], ("plane", "keep"))
                spec = D.clip_by_plane(spec, _parse_plane(f["plane"], space, n), _point(f["keep"], n))
            elif tokens[0] == "piece":
                if spec is None:
                    raise UsageError("piece lines follow the shape")
                if len(tokens) != 3 or not tokens[2].startswith("data="):
                    raise UsageError("expected 'piece <id> data=<value>'")
                try:
                    pid = int(tokens[1])
                except ValueError as exc:
                    raise UsageError(f"bad piece id {tokens[1]!r}") from exc
                if pid not in spec.piece_ids:
                    raise UsageError(f"the shape has no piece {pid}")
                if pid in data:
                    raise UsageError(f"piece {pid} given twice")
                data[pid] = _parse_data(tokens[2][len("data="):], n, base)
            else:
                raise UsageError(f"unknown keyword {tokens[0]!r}")
        except UsageError as exc:
            raise UsageError(f"line {lineno}: {exc}") from exc
        except (ValueError, TypeError) as exc:
            raise UsageError(f"line {lineno}: {exc}") from exc
    if spec is None:
        raise UsageError("domain file has no shape")
    spec = spec.with_data(data)
    missing = [p.id for p in spec.pieces if p.data is None]
    if missing:
        raise UsageError(f"no data for piece(s) {missing}")
    return spec


def read_domain(path) -> DomainSpec:
    path = Path(path)
    if not path.exists():
        raise UsageError(f"domain file not found: {path}")
    return parse_domain(path.read_text(), path.parent)
