"""Odd reflection of height fields across zero-data geodesic hyperplanes.

A solution vanishing on a boundary piece contained in a geodesic hyperplane
extends to the reflected domain by ``u(I p) = -u(p)``.  The doubled domain is
built by mapping every constraint of the original cells through the
reflection (planes and spheres map to planes and spheres under both affine
reflections and inversions) and turning the mirror constraint into an
internal wall.
"""

from __future__ import annotations

import logging
from dataclasses import replace

import numpy as np

from ..config import SolverConfig
from ..domains import (BoundaryData, DomainSpec, EuclideanHyperplane, Piece, PlaneConstraint, Shape,
                       SphereConstraint, plane_side, reflection_for)
from ..errors import UsageError
from ..geometry import GeodesicHyperplane
from ..raster import COLLAR, DIRICHLET, EXTERIOR, INTERIOR, RasterizedDomain, rasterize
from .interp import interpolate
from .solver import HeightField, make_operator

logger = logging.getLogger(__name__)


# -- plane bookkeeping -------------------------------------------------------------------


def same_plane(a, b, tol: float = 1e-10) -> bool:
    """Whether two hyperplane descriptions define the same set."""
    if a is None or b is None or type(a) is not type(b):
        return False
    if isinstance(a, EuclideanHyperplane):
        for s in (1.0, -1.0):
            if np.allclose(a.normal, s * b.normal, atol=tol) and abs(a.offset - s * b.offset) <= tol:
                return True
        return False
    if a.kind != b.kind:
        return False
    if a.kind == "vertical":
        for s in (1.0, -1.0):
            if np.allclose(a.normal, s * b.normal, atol=tol) and abs(a.offset - s * b.offset) <= tol:
                return True
        return False
    return bool(np.allclose(a.center, b.center, atol=tol) and abs(a.radius - b.radius) <= tol)


class _Mirror:
    """The reflection across ``plane`` with closed-form images of planes and spheres."""

    def __init__(self, plane, n: int):
        self.plane = plane
        self.n = n
        self.map = reflection_for(plane)
        if isinstance(plane, GeodesicHyperplane) and plane.kind == "hemisphere":
            self.kind = "inversion"
            self.foot = np.append(plane.center, 0.0)
            self.radius = float(plane.radius)
        else:
            self.kind = "affine"
            if isinstance(plane, GeodesicHyperplane):
                self.unit = np.append(plane.normal, 0.0)
            else:
                self.unit = np.asarray(plane.normal, dtype=float)
            self.offset = float(plane.offset)

    def apply(self, x) -> np.ndarray:
        return self.map.apply(x)

    # images of the primitive regions
    def plane_image(self, unit, offset):
        """Image of ``{unit . x <= offset}`` as (kind, params)."""
        if self.kind == "affine":
            nu = self.unit
            su = unit - 2.0 * (unit @ nu) * nu
            return "plane", (su, offset - 2.0 * self.offset * (unit @ nu))
        d = offset - unit @ self.foot
        if abs(d) < 1e-14:
            return "plane", (unit, offset)
        R2 = self.radius**2
        center = self.foot + R2 * unit / (2.0 * d)
        return "sphere", (center, R2 / (2.0 * abs(d)), d < 0)

    def sphere_image(self, center, radius, inside):
        if self.kind == "affine":
            return "sphere", (self.apply(center), radius, inside)
        v = center - self.foot
        D = float(v @ v) - radius**2
        if abs(D) < 1e-14:
            raise UsageError("a boundary sphere passes through the inversion centre")
        R2 = self.radius**2
        return "sphere", (self.foot + R2 * v / D, R2 * radius / abs(D), inside if D > 0 else not inside)


def _geodesic_of(kind, params, n):
    if kind == "plane":
        unit, off = params
        if abs(unit[-1]) > 1e-12:
            return None
        return GeodesicHyperplane("vertical", n, normal=unit[:-1], offset=float(off))
    center, radius, _ = params
    if abs(center[-1]) > 1e-12 * max(1.0, radius):
        return None
    return GeodesicHyperplane("hemisphere", n, center=center[:-1], radius=float(radius))


def reflect_constraint(con, mirror: _Mirror, space: str):
    """Constraint describing the image region of ``con`` under ``mirror``."""
    if isinstance(con, PlaneConstraint):
        kind, params = mirror.plane_image(con.unit, con.offset)
    elif isinstance(con, SphereConstraint):
        kind, params = mirror.sphere_image(con.center, con.radius, con.inside)
    else:
        if mirror.kind != "affine" or abs(mirror.unit[-1]) > 0:
            raise UsageError(f"cannot reflect a {type(con).__name__} through this hyperplane")
        return replace(con, axis=mirror.apply(np.append(con.axis, 0.0))[:-1])
    plane = None
    if con.plane is not None:
        if space == "hyperbolic":
            plane = _geodesic_of(kind, params, mirror.n)
        elif kind == "plane":
            plane = EuclideanHyperplane(params[0], float(params[1]))
    if kind == "plane":
        return PlaneConstraint(np.asarray(params[0], float), float(params[1]), plane=plane)
    center, radius, inside = params
    return SphereConstraint(np.asarray(center, float), float(radius), inside=bool(inside), plane=plane)


def _odd_data(data: BoundaryData, mirror: _Mirror) -> BoundaryData:
    if data.kind == "const":
        return BoundaryData.const(-data.value)
    if data.infinite:
        return BoundaryData.inf(-data.sign)
    if data.kind == "samples":
        return BoundaryData.samples(mirror.apply(data.points), -data.values, data.source)
    func = data.func
    return BoundaryData.function(lambda x: -np.asarray(func(mirror.apply(x)), dtype=float))


# -- doubled domain -------------------------------------------------------------------------


def _mirror_constraints(domain: DomainSpec, plane):
    """(cell index, constraint index, piece id) of the constraints lying in ``plane``."""
    hits = []
    for c, cell in enumerate(domain.shape.cells):
        for j, (con, pid) in enumerate(cell):
            if same_plane(con.plane, plane):
                hits.append((c, j, pid))
    return hits


def _is_zero(data: BoundaryData | None) -> bool:
    return data is not None and data.kind == "const" and data.value == 0.0


def doubled_domain(domain: DomainSpec, plane) -> tuple[DomainSpec, bool]:
    """Domain and its mirror image glued along ``plane``.

    Returns ``(doubled, already)``; ``already`` is True when ``plane`` is an
    internal wall of ``domain`` (the domain is its own double).

    Raises
    ------
    UsageError
        ``plane`` carries no zero-data boundary piece of ``domain``.
    """
    hits = _mirror_constraints(domain, plane)
    if not hits:
        raise UsageError("the hyperplane does not bound the domain")
    if all(pid is None for _, _, pid in hits):
        return domain, True
    for _, _, pid in hits:
        if pid is not None and not _is_zero(domain.piece(pid).data):
            raise UsageError(f"piece {pid} in the mirror hyperplane does not carry zero data")
    mirror = _Mirror(plane, domain.n)
    offset = max(domain.piece_ids) + 1
    walls = {(c, j) for c, j, _ in hits}
    used = set()
    cells = []
    for c, cell in enumerate(domain.shape.cells):
        cells.append(tuple((con, None if (c, j) in walls else pid) for j, (con, pid) in enumerate(cell)))
        used.update(pid for j, (con, pid) in enumerate(cell) if (c, j) not in walls and pid is not None)
    for c, cell in enumerate(domain.shape.cells):
        cells.append(tuple((reflect_constraint(con, mirror, domain.space),
                            None if ((c, j) in walls or pid is None) else pid + offset)
                           for j, (con, pid) in enumerate(cell)))
    pieces = [p for p in domain.pieces if p.id in used]
    pieces += [Piece(p.id + offset, p.label + "'", _odd_data(p.data, mirror)) for p in domain.pieces if p.id in used]
    lo, hi = _doubled_bbox(domain, mirror)
    shape = Shape("doubled", {"base": domain.shape, "plane": plane, "offset": offset}, tuple(cells), (lo, hi))
    return DomainSpec(domain.space, domain.n, shape, tuple(pieces), domain.rho_omega, domain.r_omega), False


def _doubled_bbox(domain: DomainSpec, mirror: _Mirror):
    lo, hi = (np.asarray(b, dtype=float) for b in domain.shape.bbox)
    n = domain.n
    corners = np.array([[hi[i] if (m >> i) & 1 else lo[i] for i in range(n)] for m in range(2**n)])
    pts = [corners]
    if mirror.kind == "inversion":
        # the image of a box is not a box; bound it by the images of dense samples of the domain
        rng = np.random.default_rng(0)
        x = rng.uniform(lo, hi, size=(20000, n))
        pts.append(x[domain.contains(x)])
        pts.append(domain.sample_boundary(4000, rng))
    img = mirror.apply(np.concatenate(pts))
    lo2 = np.minimum(lo, img.min(axis=0))
    hi2 = np.maximum(hi, img.max(axis=0))
    if mirror.kind == "inversion":
        pad = 0.02 * (hi2 - lo2)
        lo2, hi2 = lo2 - pad, hi2 + pad
        if domain.space == "hyperbolic":
            lo2[-1] = max(lo2[-1], 0.5 * min(lo[-1], img[:, -1].min()))
    return lo2, hi2


# -- value transfer ----------------------------------------------------------------------------


def _lookup(field: HeightField, phys: np.ndarray) -> np.ndarray:
    """Field values at physical points: exact at lattice nodes, interpolated otherwise."""
    r = field.raster
    grid = phys * r.scale
    rel = (grid - r.origin) / r.h
    idx = np.rint(rel)
    out = np.full(len(phys), np.nan)
    on_node = np.all(np.abs(rel - idx) < 1e-7, axis=1) & np.all(idx >= 0, axis=1) & np.all(idx < np.array(r.dims), axis=1)
    if on_node.any():
        key = tuple(idx[on_node].astype(np.int64).T)
        vals = field.u[key]
        ok = r.node_class[key] != EXTERIOR
        sub = np.flatnonzero(on_node)
        out[sub[ok]] = vals[ok]
    rest = np.isnan(out)
    if rest.any():
        out[rest] = interpolate(r, field.u, grid[rest])
    return out


def _continue_across(field: HeightField, mirror: "_Mirror", home: float, tol: float,
                     sweeps: int = 8) -> HeightField:
    """Copy of ``field`` whose nodes beyond the mirror plane hold the odd continuation.

    Those nodes carry the zero data of the mirror piece in the original
    raster; interpolating mirrored points near the seam through them would
    lose an order.  Their values ``-u(I x)`` depend on each other only
    through interpolation weights below one, so a few sweeps converge.
    """
    r = field.raster
    idx = np.argwhere(r.node_class != EXTERIOR)
    phys = r.physical(r.origin + r.h * idx)
    beyond = home * plane_side(mirror.plane, phys) < -tol
    if not beyond.any():
        return field
    key = tuple(idx[beyond].T)
    images = mirror.apply(phys[beyond]) * r.scale
    out = field.copy()
    for _ in range(sweeps):
        new = -interpolate(r, out.u, images)
        done = np.max(np.abs(new - out.u[key])) <= 1e-15 * max(1.0, np.max(np.abs(new)))
        out.u[key] = new
        if done:
            break
    return out


def transfer(field: HeightField, target: RasterizedDomain, mirror_plane=None, cap: float | None = None) -> np.ndarray:
    """Values on ``target`` from ``field``, oddly reflected across ``mirror_plane`` on the far side.

    Dirichlet nodes of ``target`` keep their data and collar nodes get
    ``sign * cap``; interior nodes lying on the mirror plane get 0.
    """
    src = field.raster
    u = np.full(target.dims, np.nan)
    act = np.argwhere(target.node_class != EXTERIOR)
    phys = target.physical(target.origin + target.h * act)
    vals = np.empty(len(act))
    if mirror_plane is None:
        vals[:] = _lookup(field, phys)
    else:
        mirror = _Mirror(mirror_plane, target.n)
        inside = src.physical(src.coords(src.nodes_of(INTERIOR)))
        home = np.sign(np.median(plane_side(mirror_plane, inside))) or 1.0
        side = home * plane_side(mirror_plane, phys)
        tol = 1e-9 * target.h
        near = side >= -tol
        vals[near] = _lookup(field, phys[near])
        far = ~near
        if far.any():
            ext = _continue_across(field, mirror, home, tol)
            vals[far] = -_lookup(ext, mirror.apply(phys[far]))
        on = np.abs(side) <= tol
        vals[on] = 0.0
    u[tuple(act.T)] = vals
    cls = target.node_class
    u[cls == DIRICHLET] = target.values[cls == DIRICHLET]
    collar = cls == COLLAR
    if collar.any():
        t = field.cap if cap is None else cap
        if t is None:
            raise UsageError("a field over collar nodes needs a cap")
        u[collar] = target.collar_sign[collar] * t
    return u


def _rasterize_doubled(doubled: DomainSpec, plane, template: RasterizedDomain) -> RasterizedDomain:
    """Rasterize the doubled domain; Dirichlet nodes on the mirror carry the odd data's value 0.

    Where a data piece meets the mirror with nonzero data, nodes on the
    mirror would otherwise take the value of whichever copy owns them.
    """
    target = rasterize(doubled, template.h, template.delta)
    dirichlet = np.argwhere(target.node_class == DIRICHLET)
    side = plane_side(plane, target.physical(target.origin + target.h * dirichlet))
    on = np.abs(side) <= 1e-9 * target.h
    if on.any():
        values = target.values.copy()
        values[tuple(dirichlet[on].T)] = 0.0
        target = replace(target, values=values)
    return target


def _finish(raster: RasterizedDomain, u: np.ndarray, field: HeightField, config: SolverConfig | None):
    op = make_operator(raster, config)
    flat = np.where(np.isnan(u), 0.0, u).ravel()
    with np.errstate(all="ignore"):
        merit = float(op.merit(flat)) if op.m else 0.0
        grad = float(op.max_gradient(flat))
    return HeightField(raster, u, merit, field.converged, field.iterations, list(field.history), field.cap, grad)


def reflect_extend(field: HeightField, plane, config: SolverConfig | None = None) -> HeightField:
    """Odd extension of ``field`` across the zero-data hyperplane ``plane``.

    The doubled domain is rasterized with the field's spacing and height
    floor, so a vertical ``plane`` on a lattice hyperplane maps nodes onto
    nodes; otherwise mirrored values are interpolated multilinearly.  When
    ``plane`` is already an internal wall of the field's domain the field is
    re-extended onto its own raster, which makes the operation an involution.

    Raises
    ------
    UsageError
        ``plane`` does not carry a zero-data piece of the field's domain.
    """
    domain = field.raster.domain
    if domain is None:
        raise UsageError("field has no domain attached")
    doubled, already = doubled_domain(domain, plane)
    if already:
        target = field.raster
    else:
        target = _rasterize_doubled(doubled, plane, field.raster)
    if target.scale != field.raster.scale:
        logger.info("doubled raster uses dilation %.6g (original %.6g); values are interpolated",
                    target.scale, field.raster.scale)
    u = transfer(field, target, plane)
    return _finish(target, u, field, config)


def restrict(field: HeightField, raster: RasterizedDomain, config: SolverConfig | None = None) -> HeightField:
    """``field`` sampled on another raster (boundary nodes keep that raster's data)."""
    return _finish(raster, transfer(field, raster, None), field, config)


def odd_solve(field: HeightField, plane, config: SolverConfig | None = None) -> HeightField:
    """Direct solve on the doubled domain with the odd data (the reflection oracle)."""
    from .solver import solve_with_boundary

    doubled, already = doubled_domain(field.raster.domain, plane)
    target = field.raster if already else _rasterize_doubled(doubled, plane, field.raster)
    cap = field.cap if np.any(target.node_class == COLLAR) else 0.0
    if cap is None:
        raise UsageError("a field over collar nodes needs a cap")
    return solve_with_boundary(target, target.boundary_values(cap), config)
