"""Domain descriptions with tagged boundary pieces.

A domain is stored as a union of *cells*; each cell is an intersection of
Euclidean constraints in model coordinates (the half-space model for
hyperbolic domains).  Every constraint is either a boundary piece (it carries
a piece id whose data is looked up in the :class:`DomainSpec`) or an internal
wall between two cells of a union (piece id ``None``).

Constraint surfaces are planes, spheres and the rotational cones of special
rotational domains, which covers geodesic hyperplanes (vertical planes and
hemispheres), geodesic balls (Euclidean balls), equidistant hypersurfaces
and computational clip boxes.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Literal, Sequence

import numpy as np

from .errors import DegenerateInputError, UsageError
from .geometry import (
    GeodesicHyperplane, HPoint, Reflection, geodesic_point, halfspace_to_klein,
    klein_to_halfspace,
)

logger = logging.getLogger(__name__)

Space = Literal["hyperbolic", "euclidean"]


@dataclass(frozen=True, eq=False)
class EPoint:
    """A point of Euclidean n-space."""

    coords: np.ndarray
    dim: int = field(init=False)

    def __post_init__(self):
        c = np.array(self.coords, dtype=float).reshape(-1)
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)
        object.__setattr__(self, "dim", c.size)

    def __eq__(self, other):
        return isinstance(other, EPoint) and np.array_equal(self.coords, other.coords)

    def __hash__(self):
        return hash(self.coords.tobytes())


def as_array(p) -> np.ndarray:
    if isinstance(p, (HPoint, EPoint)):
        return np.array(p.coords, dtype=float)
    return np.asarray(p, dtype=float)


# -- reflections that work in both geometries --------------------------------


@dataclass(frozen=True, eq=False)
class EuclideanHyperplane:
    """Affine hyperplane ``normal . x = offset`` of R^n (unit normal)."""

    normal: np.ndarray
    offset: float

    @classmethod
    def through_points(cls, points) -> "EuclideanHyperplane":
        pts = np.array([as_array(p) for p in points])
        m, n = pts.shape
        if m != n:
            raise UsageError(f"need exactly n={n} points, got {m}")
        diffs = pts[1:] - pts[0]
        _, sv, vt = np.linalg.svd(np.vstack([diffs, np.zeros(n)]) if m == 1 else diffs)
        if m > 1 and (sv.size < n - 1 or sv[n - 2] < 1e-10 * max(sv[0], 1e-300)):
            raise UsageError("points do not determine a unique hyperplane")
        normal = vt[-1]
        return cls(normal, float(normal @ pts[0]))

    def signed(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float) @ self.normal - self.offset

    def contains(self, p, tol: float = 1e-10) -> bool:
        return bool(abs(float(self.signed(as_array(p)))) < tol)


@dataclass(frozen=True)
class EuclideanReflection:
    plane: EuclideanHyperplane

    def apply(self, x) -> np.ndarray:
        x = np.array(x, dtype=float)
        s = self.plane.signed(x)
        return x - 2.0 * s[..., None] * self.plane.normal


def reflection_for(plane):
    if isinstance(plane, GeodesicHyperplane):
        return Reflection(plane)
    return EuclideanReflection(plane)


def plane_side(plane, x) -> np.ndarray:
    """Sign-carrying function vanishing on ``plane`` (sinh-distance or Euclidean offset)."""
    if isinstance(plane, GeodesicHyperplane):
        return plane.sinh_dist(x)
    return plane.signed(x)


# -- constraints ----------------------------------------------------------------


class Constraint:
    """Region ``{level <= 0}``; ``level`` is a signed Euclidean distance (exact or first order)."""

    #: geodesic or Euclidean hyperplane when the constraint surface is totally geodesic
    plane = None

    def level(self, x: np.ndarray) -> np.ndarray:  # pragma: no cover - interface
        raise NotImplementedError

    def project(self, x: np.ndarray) -> np.ndarray:  # pragma: no cover - interface
        raise NotImplementedError

    def normal(self, x: np.ndarray) -> np.ndarray:  # pragma: no cover - interface
        """Outward unit normal of the level set through ``x``."""
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class PlaneConstraint(Constraint):
    """``normal . x <= offset`` with unit ``normal``."""

    unit: np.ndarray
    offset: float
    plane: object = None

    def level(self, x):
        return np.asarray(x) @ self.unit - self.offset

    def project(self, x):
        x = np.asarray(x, dtype=float)
        return x - self.level(x)[..., None] * self.unit

    def normal(self, x):
        return np.broadcast_to(self.unit, np.shape(x)).copy()


@dataclass(frozen=True, eq=False)
class SphereConstraint(Constraint):
    """``|x - center| <= radius`` (inside) or ``>= radius`` (outside)."""

    center: np.ndarray
    radius: float
    inside: bool = True
    plane: object = None

    def level(self, x):
        r = np.linalg.norm(np.asarray(x) - self.center, axis=-1)
        return r - self.radius if self.inside else self.radius - r

    def project(self, x):
        d = np.asarray(x, dtype=float) - self.center
        r = np.linalg.norm(d, axis=-1, keepdims=True)
        r = np.where(r == 0.0, 1.0, r)
        return self.center + self.radius * d / r

    def normal(self, x):
        d = np.asarray(x, dtype=float) - self.center
        d = d / np.linalg.norm(d, axis=-1, keepdims=True)
        return d if self.inside else -d


@dataclass(frozen=True, eq=False)
class ConeConstraint(Constraint):
    """Rotational region ``x_n >= apex + slope * |x' - axis|`` about a vertical axis."""

    axis: np.ndarray
    apex: float
    slope: float

    def _rz(self, x):
        x = np.asarray(x, dtype=float)
        return np.linalg.norm(x[..., :-1] - self.axis, axis=-1), x[..., -1]

    def level(self, x):
        r, z = self._rz(x)
        return (self.apex + self.slope * r - z) / math.hypot(1.0, self.slope)

    def project(self, x):
        x = np.asarray(x, dtype=float)
        r, z = self._rz(x)
        # project in the meridian half-plane onto the ray r >= 0 of the profile line
        k = 1.0 / (1.0 + self.slope**2)
        rp = np.maximum(k * (r + self.slope * (z - self.apex)), 0.0)
        zp = self.apex + self.slope * rp
        horiz = x[..., :-1] - self.axis
        safe = np.where(r == 0.0, 1.0, r)[..., None]
        dirs = np.where(r[..., None] == 0.0, 0.0, horiz / safe)
        out = np.empty_like(x)
        out[..., :-1] = self.axis + rp[..., None] * dirs
        out[..., -1] = zp
        return out

    def normal(self, x):
        x = np.asarray(x, dtype=float)
        r, _ = self._rz(x)
        horiz = x[..., :-1] - self.axis
        safe = np.where(r == 0.0, 1.0, r)[..., None]
        dirs = horiz / safe
        out = np.empty_like(x)
        out[..., :-1] = self.slope * dirs
        out[..., -1] = -1.0
        return out / math.hypot(1.0, self.slope)


def constraint_from_plane(plane, inside_point) -> PlaneConstraint | SphereConstraint:
    """Constraint for the side of a (geodesic or Euclidean) hyperplane containing ``inside_point``."""
    x = as_array(inside_point)
    if isinstance(plane, EuclideanHyperplane):
        s = 1.0 if float(plane.signed(x)) < 0 else -1.0
        return PlaneConstraint(s * plane.normal, s * plane.offset, plane=plane)
    if plane.kind == "vertical":
        unit = np.append(plane.normal, 0.0)
        s = 1.0 if float(unit @ x - plane.offset) < 0 else -1.0
        return PlaneConstraint(s * unit, s * plane.offset, plane=plane)
    center = np.append(plane.center, 0.0)
    inside = bool(np.linalg.norm(x - center) < plane.radius)
    return SphereConstraint(center, plane.radius, inside=inside, plane=plane)


def box_constraints(lo, hi, first_id: int | None = 0, same_id: bool = False):
    """Constraints of an axis-aligned box; ids 2i (low face) and 2i+1 (high face)."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    out = []
    for i in range(lo.size):
        e = np.zeros(lo.size)
        e[i] = 1.0
        ids = (first_id, first_id) if same_id else (first_id + 2 * i, first_id + 2 * i + 1)
        out.append((PlaneConstraint(-e, -lo[i], plane=_axis_plane(e, lo[i])), ids[0]))
        out.append((PlaneConstraint(e, hi[i], plane=_axis_plane(e, hi[i])), ids[1]))
    return out


def _axis_plane(e, c):
    # coordinate planes x_i = c are geodesic only for i < n; the top and bottom faces are not
    if e[-1] == 0.0:
        return GeodesicHyperplane("vertical", e.size, normal=e[:-1], offset=c)
    return None


# -- boundary data ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BoundaryData:
    """Data on one boundary piece.

    kind ``const`` (``value``), ``function`` (``func`` of physical coordinates,
    vectorized over rows), ``samples`` (scattered ``points`` / ``values``,
    nearest-sample lookup), ``plus_inf`` or ``minus_inf``.
    """

    kind: Literal["const", "function", "samples", "plus_inf", "minus_inf"]
    value: float = 0.0
    func: Callable[[np.ndarray], np.ndarray] | None = None
    points: np.ndarray | None = None
    values: np.ndarray | None = None
    source: str | None = None

    @classmethod
    def const(cls, c: float) -> "BoundaryData":
        return cls("const", value=float(c))

    @classmethod
    def function(cls, func) -> "BoundaryData":
        return cls("function", func=func)

    @classmethod
    def samples(cls, points, values, source: str | None = None) -> "BoundaryData":
        return cls("samples", points=np.asarray(points, float), values=np.asarray(values, float), source=source)

    @classmethod
    def inf(cls, sign: int) -> "BoundaryData":
        return cls("plus_inf" if sign > 0 else "minus_inf")

    @property
    def infinite(self) -> bool:
        return self.kind in ("plus_inf", "minus_inf")

    @property
    def sign(self) -> int:
        return {"plus_inf": 1, "minus_inf": -1}.get(self.kind, 0)

    def evaluate(self, nodes: np.ndarray, snapped: np.ndarray) -> np.ndarray:
        """Values at boundary nodes; functions see node coordinates, samples the snapped points."""
        if self.kind == "const":
            return np.full(len(nodes), self.value)
        if self.kind == "function":
            return np.asarray(self.func(nodes), dtype=float).reshape(len(nodes))
        if self.kind == "samples":
            from scipy.spatial import cKDTree

            _, idx = cKDTree(self.points).query(snapped)
            return self.values[idx]
        raise UsageError("infinite data has no finite values")

    def describe(self) -> str:
        if self.kind == "const":
            return repr(self.value)
        if self.kind == "plus_inf":
            return "+inf"
        if self.kind == "minus_inf":
            return "-inf"
        if self.kind == "samples":
            return f"file:{self.source}" if self.source else "samples"
        return "function"


@dataclass(frozen=True)
class Piece:
    id: int
    label: str
    data: BoundaryData | None = None


# -- shapes -------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Shape:
    """Geometric part of a domain: the cells, a bounding box and the parameters."""

    kind: str
    params: dict
    cells: tuple
    bbox: tuple

    def constraints(self):
        for cell in self.cells:
            yield from cell


@dataclass(frozen=True, eq=False)
class DomainSpec:
    space: Space
    n: int
    shape: Shape
    pieces: tuple
    rho_omega: float | None = None
    r_omega: float | None = None

    def piece(self, pid: int) -> Piece:
        for p in self.pieces:
            if p.id == pid:
                return p
        raise KeyError(pid)

    @property
    def piece_ids(self) -> list[int]:
        return [p.id for p in self.pieces]

    def with_data(self, data: dict | Callable | BoundaryData) -> "DomainSpec":
        """Attach boundary data: a mapping id -> data, one datum for all, or a callable for all."""
        new = []
        for p in self.pieces:
            if isinstance(data, dict):
                d = data.get(p.id, p.data)
            else:
                d = data
            if d is not None and not isinstance(d, BoundaryData):
                if callable(d):
                    d = BoundaryData.function(d)
                elif d in ("+inf", math.inf):
                    d = BoundaryData.inf(1)
                elif d in ("-inf", -math.inf):
                    d = BoundaryData.inf(-1)
                else:
                    d = BoundaryData.const(float(d))
            new.append(replace(p, data=d))
        return replace(self, pieces=tuple(new))

    def infinite_pieces(self) -> list[int]:
        return [p.id for p in self.pieces if p.data is not None and p.data.infinite]

    def contains(self, x, tol: float = 0.0) -> np.ndarray:
        """Closed membership with a Euclidean tolerance (internal walls are ignored)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.zeros(len(x), dtype=bool)
        for cell in self.shape.cells:
            ok = np.ones(len(x), dtype=bool)
            for con, _pid in cell:
                ok &= con.level(x) <= tol
            out |= ok
        return out

    def level(self, x) -> np.ndarray:
        """Signed distance proxy to the union (negative inside, internal walls included)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        best = np.full(len(x), np.inf)
        for cell in self.shape.cells:
            v = np.full(len(x), -np.inf)
            for con, _pid in cell:
                v = np.maximum(v, con.level(x))
            best = np.minimum(best, v)
        return best

    def boundary_constraints(self, pid: int | None = None):
        for cell in self.shape.cells:
            for con, p in cell:
                if p is not None and (pid is None or p == pid):
                    yield con, p

    def sample_boundary(self, m: int, rng: np.random.Generator, pid: int | None = None, tol: float = 1e-9):
        """Random points on the boundary (projected from the bounding box and filtered)."""
        lo, hi = (np.asarray(b) for b in self.shape.bbox)
        pts = []
        tries = 0
        while sum(len(p) for p in pts) < m and tries < 50:
            tries += 1
            x = rng.uniform(lo, hi, size=(4 * m, self.n))
            for con, p in self.boundary_constraints(pid):
                y = con.project(x)
                ok = self.contains(y, tol) & (np.abs(con.level(y)) < tol)
                if self.space == "hyperbolic":
                    ok &= y[:, -1] > 0
                pts.append(y[ok])
        out = np.concatenate(pts) if pts else np.empty((0, self.n))
        return out[rng.permutation(len(out))[:m]]


def _pieces(labels: Sequence[str]) -> tuple:
    return tuple(Piece(i, lab) for i, lab in enumerate(labels))


def _check_space(space: str) -> Space:
    if space not in ("hyperbolic", "euclidean"):
        raise UsageError(f"unknown space {space!r}")
    return space  # type: ignore[return-value]


# -- builders -----------------------------------------------------------------------


def make_ball(center, radius: float, space: Space = "hyperbolic") -> DomainSpec:
    """Geodesic ball (hyperbolic) or Euclidean ball; one boundary piece with id 0."""
    space = _check_space(space)
    if isinstance(center, HPoint) and center.model == "ball":
        from .geometry import ball_to_halfspace

        center = ball_to_halfspace(center)
    c = as_array(center)
    n = c.size
    if not radius > 0:
        raise UsageError("ball radius must be positive")
    if space == "hyperbolic":
        HPoint(c)
        ec = c.copy()
        ec[-1] = c[-1] * math.cosh(radius)
        er = c[-1] * math.sinh(radius)
    else:
        ec, er = c, float(radius)
    con = SphereConstraint(ec, er, inside=True)
    shape = Shape("ball", {"center": c, "radius": float(radius)}, (((con, 0),),), (ec - er, ec + er))
    return DomainSpec(space, n, shape, _pieces(["sphere"]))


def make_box(lo, hi, space: Space = "hyperbolic") -> DomainSpec:
    """Axis-aligned coordinate box; faces 2i (x_i = lo_i) and 2i+1 (x_i = hi_i)."""
    space = _check_space(space)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if np.any(hi <= lo):
        raise UsageError("box needs lo < hi on every axis")
    if space == "hyperbolic" and lo[-1] <= 0:
        raise UsageError("hyperbolic box must lie in x_n > 0")
    n = lo.size
    cell = tuple(box_constraints(lo, hi))
    labels = [f"x{i + 1}={'lo' if s == 0 else 'hi'}" for i in range(n) for s in (0, 1)]
    shape = Shape("box", {"lo": lo, "hi": hi}, (cell,), (lo, hi))
    return DomainSpec(space, n, shape, _pieces(labels))


def clip_by_plane(domain: DomainSpec, plane, keep_point, label: str = "cut") -> DomainSpec:
    """Intersection of ``domain`` with the side of ``plane`` containing ``keep_point``.

    The cut becomes a new boundary piece (id one above the largest existing
    id) on every cell; it carries no data until :meth:`DomainSpec.with_data`.
    """
    x = as_array(keep_point)
    if abs(float(plane_side(plane, x))) < 1e-12:
        raise UsageError("keep_point lies on the cutting plane")
    con = constraint_from_plane(plane, x)
    pid = max(domain.piece_ids) + 1
    cells = tuple(tuple(cell) + ((con, pid),) for cell in domain.shape.cells)
    lo, hi = (np.array(b, dtype=float) for b in domain.shape.bbox)
    if isinstance(con, PlaneConstraint):
        axis = np.flatnonzero(np.abs(con.unit) > 1 - 1e-14)
        if axis.size == 1:
            i = int(axis[0])
            if con.unit[i] > 0:
                hi[i] = min(hi[i], con.offset)
            else:
                lo[i] = max(lo[i], -con.offset)
    shape = Shape("clipped", {"base": domain.shape, "plane": plane, "keep": x}, cells, (lo, hi))
    return replace(domain, shape=shape, pieces=tuple(domain.pieces) + (Piece(pid, label),))


def _polyhedron_bbox(verts: np.ndarray, space: Space):
    if space == "euclidean":
        return verts.min(axis=0), verts.max(axis=0)
    # faces bulge in half-space coordinates; sample the Klein-model hull densely
    k = halfspace_to_klein(verts)
    m = len(verts)
    grid = 24
    samples = []
    for combo in itertools.product(range(grid + 1), repeat=m - 1):
        if sum(combo) > grid:
            continue
        w = np.array(list(combo) + [grid - sum(combo)], dtype=float) / grid
        samples.append(w @ k)
    pts = klein_to_halfspace(np.array(samples))
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    pad = 0.02 * (hi - lo).max()
    return lo - pad, hi + pad


def make_admissible_polyhedron(vertices, space: Space = "hyperbolic") -> DomainSpec:
    """Convex hull of n+1 independent points; face ``i`` lies opposite vertex ``A_i``."""
    space = _check_space(space)
    verts = np.array([as_array(v) for v in vertices], dtype=float)
    if verts.ndim != 2 or verts.shape[0] != verts.shape[1] + 1:
        raise UsageError("a polyhedron in dimension n needs n+1 vertices")
    n = verts.shape[1]
    if space == "hyperbolic":
        for v in verts:
            HPoint(v)
    planes = []
    for i in range(n + 1):
        others = np.delete(verts, i, axis=0)
        try:
            pl = (GeodesicHyperplane.through_points(others) if space == "hyperbolic"
                  else EuclideanHyperplane.through_points(others))
        except UsageError as exc:
            raise DegenerateInputError(f"vertices are dependent: {exc}") from exc
        side = float(plane_side(pl, verts[i]))
        if space == "hyperbolic":
            side = math.asinh(side)
        if abs(side) < 1e-10:
            raise DegenerateInputError("all vertices lie on a common hyperplane")
        planes.append(pl)
    cell = tuple((constraint_from_plane(pl, verts[i]), i) for i, pl in enumerate(planes))
    shape = Shape("polyhedron", {"vertices": verts, "planes": tuple(planes)}, (cell,), _polyhedron_bbox(verts, space))
    return DomainSpec(space, n, shape, _pieces([f"face{i}" for i in range(n + 1)]))


@dataclass(frozen=True)
class RotationalGeometry:
    axis: np.ndarray
    a0: float
    b: float
    r1: float
    z1: float
    slope: float


def make_rotational_domain(axis, A0, A1, B) -> DomainSpec:
    """Special rotational domain about the vertical geodesic ``x' = axis``.

    ``B`` and ``A0`` lie on the axis with ``0 < A0_n < B_n``; ``A1`` lies on the
    geodesic hyperplane through ``B`` orthogonal to the axis (the hemisphere
    ``|x - (axis, 0)| = B_n``).  Piece 0 is the rotated Euclidean segment
    from ``A0`` to ``A1`` and piece 1 the geodesic ball of that hemisphere
    centred at ``B`` with ``A1`` on its rim.
    """
    axis = np.atleast_1d(np.asarray(axis, dtype=float))
    a0p, a1p, bp = as_array(A0), as_array(A1), as_array(B)
    n = axis.size + 1
    for p in (a0p, a1p, bp):
        if p.size != n:
            raise UsageError("axis and points have inconsistent dimensions")
        HPoint(p)
    if np.linalg.norm(a0p[:-1] - axis) > 1e-12 or np.linalg.norm(bp[:-1] - axis) > 1e-12:
        raise UsageError("A0 and B must lie on the axis")
    a0, b = a0p[-1], bp[-1]
    if not 0.0 < a0 < b:
        raise UsageError("A0 must lie strictly between the ideal point 0 and B on the axis")
    r1 = float(np.linalg.norm(a1p[:-1] - axis))
    z1 = float(a1p[-1])
    if r1 < 1e-12:
        raise UsageError("A1 must not lie on the axis")
    if abs(math.hypot(r1, z1) - b) > 1e-9 * b:
        raise UsageError("A1 must lie on the geodesic hyperplane through B orthogonal to the axis")
    slope = (z1 - a0) / r1
    if not slope > 0.0:
        raise UsageError("the segment A0A1 must rise away from the axis for the domain to be convex")
    # the profile must be transversal to the Killing field of translations along the axis
    # (dilations about the axis foot), i.e. never parallel to the position vector
    direction = np.array([r1, z1 - a0])
    for s in np.linspace(0.0, 1.0, 65):
        pos = np.array([0.0, a0]) + s * direction
        cross = pos[0] * direction[1] - pos[1] * direction[0]
        if abs(cross) < 1e-12 * np.linalg.norm(pos) * np.linalg.norm(direction):
            raise UsageError("the profile segment is tangent to the translation field")
    cone = ConeConstraint(axis, a0, slope)
    foot = np.append(axis, 0.0)
    hemi = GeodesicHyperplane("hemisphere", n, center=axis, radius=b)
    cap = SphereConstraint(foot, b, inside=True, plane=hemi)
    lo = np.append(axis - r1, a0)
    hi = np.append(axis + r1, b)
    geo = RotationalGeometry(axis, a0, b, r1, z1, slope)
    shape = Shape("rotational", {"axis": axis, "A0": a0p, "A1": a1p, "B": bp, "geometry": geo},
                  (((cone, 0), (cap, 1)),), (lo, hi))
    return DomainSpec("hyperbolic", n, shape, (Piece(0, "sigma"), Piece(1, "cap")))


def rotational_from_angle(n: int, a0: float, b: float, phi: float, axis=None) -> DomainSpec:
    """Convenience: rim point ``A1`` at polar angle ``phi`` from the axis on the hemisphere of radius ``b``."""
    axis = np.zeros(n - 1) if axis is None else np.asarray(axis, dtype=float)
    e1 = np.zeros(n - 1)
    e1[0] = 1.0
    A0 = np.append(axis, a0)
    B = np.append(axis, b)
    A1 = np.append(axis + b * math.sin(phi) * e1, b * math.cos(phi))
    return make_rotational_domain(axis, A0, A1, B)


def make_halfspace_trunc(plane: GeodesicHyperplane, rho: float, marker, lo, hi) -> DomainSpec:
    """``{signed distance to plane > rho} ∩ box``; piece 0 is the equidistant, piece 1 the clip faces."""
    from .geometry import equidistant_offset

    m = HPoint(as_array(marker))
    eq = equidistant_offset(plane, rho, m)
    shape_e = eq.euclidean_shape()
    if shape_e["kind"] == "plane":
        unit = shape_e["normal"] / np.linalg.norm(shape_e["normal"])
        off = shape_e["offset"] / np.linalg.norm(shape_e["normal"])
        # region: sign * (normal . x' - offset - s x_n) > 0 ; keep the marker's side of the plane's orientation
        con = PlaneConstraint(-eq.sign * unit, -eq.sign * off)
    else:
        con = SphereConstraint(shape_e["center"], shape_e["radius"], inside=eq.sign < 0)
    cell = ((con, 0),) + tuple((c, 1) for c, _ in box_constraints(lo, hi))
    shape = Shape("halfspace_trunc", {"plane": plane, "rho": float(rho), "marker": as_array(marker),
                                      "lo": np.asarray(lo, float), "hi": np.asarray(hi, float)},
                  (cell,), (np.asarray(lo, float), np.asarray(hi, float)))
    spec = DomainSpec("hyperbolic", plane.dim, shape, (Piece(0, "equidistant"), Piece(1, "clip")))
    return spec


def exterior_domain_canonical(rho0: float, lo, hi, t: float = 0.0, center=None) -> DomainSpec:
    """Complement of the closed geodesic ball of radius ``rho0``, clipped to a box.

    Piece 0 (the sphere) carries data 0; piece 1 (the clip faces) carries the
    constant stand-in ``t`` for the asymptotic value.
    """
    if not rho0 > 0:
        raise UsageError("rho0 must be positive")
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    n = lo.size
    c = np.zeros(n) if center is None else as_array(center).copy()
    if center is None:
        c[-1] = 1.0
    ec = c.copy()
    ec[-1] = c[-1] * math.cosh(rho0)
    er = c[-1] * math.sinh(rho0)
    if np.any(ec - er <= lo) or np.any(ec + er >= hi):
        raise UsageError("clip box does not contain the removed ball")
    if lo[-1] <= 0:
        raise UsageError("clip box must lie in x_n > 0")
    sphere = SphereConstraint(ec, er, inside=False)
    cell = ((sphere, 0),) + tuple((con, 1) for con, _ in box_constraints(lo, hi))
    shape = Shape("exterior", {"rho0": float(rho0), "center": c, "lo": lo, "hi": hi, "t": float(t)},
                  (cell,), (lo, hi))
    spec = DomainSpec("hyperbolic", n, shape, (Piece(0, "sphere"), Piece(1, "clip")), rho_omega=float(rho0))
    return spec.with_data({0: 0.0, 1: float(t)})


# -- reflected polyhedra --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GroupElement:
    """A composition of reflections; ``word`` lists generator indices applied right to left."""

    word: tuple
    parity: int

    def apply(self, gens, x):
        for g in reversed(self.word):
            x = gens[g].apply(x)
        return x

    def apply_inverse(self, gens, x):
        for g in self.word:
            x = gens[g].apply(x)
        return x


def seed_vertices(A0, lengths, k: int, space: Space = "hyperbolic") -> np.ndarray:
    """Vertices A0, A1 (along sin(pi/k) e1 + cos(pi/k) e2) and A_i along e_i for i >= 2."""
    a0 = as_array(A0)
    n = a0.size
    if len(lengths) != n:
        raise UsageError(f"need {n} edge lengths")
    dirs = []
    u = np.zeros(n)
    u[0] = math.sin(math.pi / k)
    u[1] = math.cos(math.pi / k)
    dirs.append(u)
    for i in range(1, n):
        e = np.zeros(n)
        e[i] = 1.0
        dirs.append(e)
    verts = [a0]
    for d, ell in zip(dirs, lengths):
        if not ell > 0:
            raise UsageError("edge lengths must be positive")
        if space == "hyperbolic":
            verts.append(geodesic_point(HPoint(a0), d, ell).coords.copy())
        else:
            verts.append(a0 + ell * d)
    return np.array(verts)


def build_second_scherk_polyhedron(A0, lengths, k: int, n: int | None = None,
                                   space: Space = "hyperbolic") -> DomainSpec:
    """Polyhedron with ``2^{n-1} k`` faces obtained by reflecting a seed polyhedron.

    The seed has vertices from :func:`seed_vertices`; its face ``F_0`` (opposite
    ``A_0``) is the only boundary face.  Reflections across the wedge planes
    ``Pi_1``, ``Pi_2`` (meeting at angle ``pi/k``) and ``Pi_3, ..., Pi_n``
    generate the copies; copy ``g`` carries ``+inf`` on its image of ``F_0``
    when ``g`` is a product of an even number of reflections, ``-inf`` otherwise.
    """
    if int(k) != k or k < 2:
        raise UsageError("k must be an integer >= 2")
    a0 = as_array(A0)
    n = a0.size if n is None else n
    if n != a0.size:
        raise UsageError("A0 dimension does not match n")
    if n not in (2, 3):
        raise UsageError("the reflected polyhedron builder supports n in {2, 3}")
    seed = make_admissible_polyhedron(seed_vertices(a0, lengths, k, space), space)
    verts = seed.shape.params["vertices"]
    planes = seed.shape.params["planes"]
    gens = [reflection_for(planes[i]) for i in range(1, n + 1)]
    elements = _orbit(gens, verts)
    expected = 2 ** (n - 1) * k
    if len(elements) != expected:
        raise UsageError(f"reflection orbit has {len(elements)} copies, expected {expected}")
    seed_cell = seed.shape.cells[0]
    cells = []
    pieces = []
    for idx, g in enumerate(elements):
        img_verts = g.apply(gens, verts)
        cell = []
        for i in range(n + 1):
            pl = _image_plane(planes[i], g, gens, verts, i, space)
            con = constraint_from_plane(pl, img_verts[i])
            cell.append((con, idx if i == 0 else None))
        cells.append(tuple(cell))
        pieces.append(Piece(idx, f"face{idx}", BoundaryData.inf(g.parity)))
    all_lo, all_hi = [], []
    for g in elements:
        img = g.apply(gens, _bbox_samples(seed))
        all_lo.append(img.min(axis=0))
        all_hi.append(img.max(axis=0))
    lo, hi = np.min(all_lo, axis=0), np.max(all_hi, axis=0)
    params = {"A0": a0, "lengths": tuple(float(x) for x in lengths), "k": int(k), "seed": seed,
              "generators": gens, "elements": tuple(elements), "seed_cell": seed_cell}
    shape = Shape("scherk2", params, tuple(cells), (lo, hi))
    return DomainSpec(space, n, shape, tuple(pieces))


def _bbox_samples(seed: DomainSpec) -> np.ndarray:
    verts = seed.shape.params["vertices"]
    if seed.space == "euclidean":
        return verts
    k = halfspace_to_klein(verts)
    m = len(verts)
    grid = 16
    samples = []
    for combo in itertools.product(range(grid + 1), repeat=m - 1):
        if sum(combo) > grid:
            continue
        w = np.array(list(combo) + [grid - sum(combo)], dtype=float) / grid
        samples.append(w @ k)
    return klein_to_halfspace(np.array(samples))


def _image_plane(plane, g: GroupElement, gens, verts, i: int, space: Space):
    others = np.delete(verts, i, axis=0)
    img = g.apply(gens, others)
    if space == "hyperbolic":
        return GeodesicHyperplane.through_points(img)
    return EuclideanHyperplane.through_points(img)


def _orbit(gens, verts) -> list[GroupElement]:
    """Breadth-first enumeration of the finite group generated by ``gens``."""
    probe = _probe_points(verts)
    identity = GroupElement((), 1)
    seen = [probe]
    out = [identity]
    frontier = [identity]
    while frontier:
        nxt = []
        for g in frontier:
            for j in range(len(gens)):
                h = GroupElement((j,) + g.word, -g.parity)
                img = h.apply(gens, probe)
                if any(np.max(np.abs(img - s)) < 1e-8 * max(1.0, np.max(np.abs(s))) for s in seen):
                    continue
                seen.append(img)
                out.append(h)
                nxt.append(h)
        frontier = nxt
        if len(out) > 4096:
            raise UsageError("reflection group is not finite")
    return out


def _probe_points(verts):
    # two generic interior points detect group elements without ambiguity
    w1 = np.linspace(1.0, 2.0, len(verts))
    w2 = w1[::-1] ** 2
    return np.array([w1 @ verts / w1.sum(), w2 @ verts / w2.sum()])


def faces_adjacent(domain: DomainSpec, i: int, j: int, tol: float = 1e-8) -> bool:
    """Whether two faces of a reflected polyhedron share an (n-2)-cell."""
    el = domain.shape.params["elements"]
    gens = domain.shape.params["generators"]
    verts = domain.shape.params["seed"].shape.params["vertices"]
    fi = el[i].apply(gens, verts[1:])
    fj = el[j].apply(gens, verts[1:])
    shared = sum(1 for p in fi if np.min(np.linalg.norm(fj - p, axis=1)) < tol)
    return shared >= domain.n - 1


def face_vertex_sets(domain: DomainSpec) -> list[np.ndarray]:
    el = domain.shape.params["elements"]
    gens = domain.shape.params["generators"]
    verts = domain.shape.params["seed"].shape.params["vertices"]
    return [g.apply(gens, verts[1:]) for g in el]


# -- convexity ------------------------------------------------------------------------


def _candidate_planes(domain: DomainSpec, p: np.ndarray, active, n_dirs: int, rng):
    """Tangent / face planes of active constraints, then sampled geodesic hyperplanes through p."""
    hyper = domain.space == "hyperbolic"
    tangent = []
    for con in active:
        if con.plane is not None:
            tangent.append(con.plane)
            continue
        nu = con.normal(p[None, :])[0]
        tangent.append(GeodesicHyperplane.through_point_normal(p, nu) if hyper
                       else EuclideanHyperplane(nu, float(nu @ p)))
    sampled = []
    n = domain.n
    if n == 2:
        dirs = [np.array([math.cos(t), math.sin(t)]) for t in np.linspace(0, math.pi, n_dirs, endpoint=False)]
    else:
        v = rng.normal(size=(n_dirs, n))
        dirs = list(v / np.linalg.norm(v, axis=1, keepdims=True))
    for nu in dirs:
        sampled.append(GeodesicHyperplane.through_point_normal(p, nu) if hyper
                       else EuclideanHyperplane(nu, float(nu @ p)))
    return tangent, sampled


def convexity_check(domain: DomainSpec, p, radius: float | None = None, tol: float | None = None,
                    n_dirs: int = 720, seed: int = 0) -> str:
    """Classify a boundary point as ``strictly_convex``, ``convex`` or ``nonconvex``.

    A geodesic hyperplane through ``p`` supports the domain locally when a
    dense sample of the domain near ``p`` lies on one side of it.  The point
    is strictly convex when a supporting tangent plane of one of the boundary
    surfaces through ``p`` touches the sampled boundary only at ``p``.
    Planes of faces through a vertex touch whole edges, so vertices report
    ``convex``.
    """
    x = as_array(p)
    lo, hi = (np.asarray(b) for b in domain.shape.bbox)
    size = float(np.max(hi - lo))
    radius = 0.05 * size if radius is None else radius
    tol = 1e-7 * size if tol is None else tol
    rng = np.random.default_rng(seed)
    n = domain.n
    # boundary test: in the closure, with both inside and outside points arbitrarily close
    if not domain.contains(x, tol)[0]:
        raise UsageError("point is not on the domain boundary")
    ring = x + 1e3 * tol * _sphere_dirs(n, 256, rng)
    inside = domain.contains(ring)
    if inside.all():
        raise UsageError("point is not on the domain boundary")
    active = [con for con, pid in domain.boundary_constraints() if abs(float(con.level(x[None])[0])) < tol]
    if not active:
        raise UsageError("point is not on the domain boundary")

    cloud = x + radius * rng.uniform(0, 1, size=(20000, 1)) ** (1.0 / n) * _sphere_dirs(n, 20000, rng)
    if domain.space == "hyperbolic":
        cloud = cloud[cloud[:, -1] > 0]
    cloud = cloud[domain.contains(cloud)]
    shell = domain.sample_boundary(4000, rng, tol=tol * 10)
    d = np.linalg.norm(shell - x, axis=1)
    shell = shell[(d < radius) & (d > 0.1 * radius)]

    tangent, sampled = _candidate_planes(domain, x, active, n_dirs if n == 2 else 4 * n_dirs, rng)
    eps = 1e-9

    def supports(pl):
        f = plane_side(pl, cloud)
        scale = max(float(np.max(np.abs(f))), 1e-300)
        return bool(np.all(f >= -eps * scale) or np.all(f <= eps * scale))

    for pl in tangent:
        if supports(pl):
            if len(shell) == 0:
                continue
            f = np.abs(plane_side(pl, shell))
            dist = np.linalg.norm(shell - x, axis=1)
            if np.all(f > 1e-6 * dist):
                return "strictly_convex"
    for pl in tangent + sampled:
        if supports(pl):
            return "convex"
    return "nonconvex"


def _sphere_dirs(n, m, rng):
    v = rng.normal(size=(m, n))
    return v / np.linalg.norm(v, axis=1, keepdims=True)
