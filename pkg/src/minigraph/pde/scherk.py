"""Second Scherk type: alternating infinite data on a reflected polyhedron."""

from __future__ import annotations

import logging

import numpy as np

from ..config import SolverConfig
from ..domains import BoundaryData, DomainSpec
from ..errors import UsageError
from ..raster import COLLAR, EXTERIOR, rasterize
from .capped import CappedResult, solve_capped_family
from .interp import interpolate
from .solver import HeightField, make_operator

logger = logging.getLogger(__name__)


def seed_problem(domain: DomainSpec) -> DomainSpec:
    """The seed polyhedron of a reflected polyhedron with ``+inf`` on ``F_0`` and 0 on the wedge faces."""
    if domain.shape.kind != "scherk2":
        raise UsageError("expected a domain from build_second_scherk_polyhedron")
    seed = domain.shape.params["seed"]
    return seed.with_data({p.id: (BoundaryData.inf(1) if p.id == 0 else BoundaryData.const(0.0))
                           for p in seed.pieces})


def scherk_second_type(domain: DomainSpec, config: SolverConfig | None = None,
                       seed_result: CappedResult | None = None) -> tuple[HeightField, CappedResult]:
    """Capped field over the reflected polyhedron, assembled from the seed solve.

    The seed problem is solved by a capped sweep.  Each copy ``g`` of the
    seed carries ``parity(g) * v(g^{-1} p)``; nodes on internal walls average
    the copies that contain them (these values cancel on the wedge planes).
    Collar nodes receive ``+-cap`` from the face signs.

    Returns
    -------
    field : HeightField
        Assembled field on a raster of the whole polyhedron with the same spacing.
    seed_result : CappedResult
        The seed sweep.
    """
    cfg = config or SolverConfig()
    if domain.n not in (2, 3):
        raise UsageError("second Scherk type is supported for n in {2, 3}")
    if seed_result is None:
        seed_raster = rasterize(seed_problem(domain), cfg.h, cfg.delta)
        seed_result = solve_capped_family(seed_raster, cfg)
    seed_field = seed_result.last
    cap = seed_result.caps[-1]
    gens = domain.shape.params["generators"]
    elements = domain.shape.params["elements"]

    raster = rasterize(domain, cfg.h, cfg.delta)
    act = np.argwhere(raster.node_class != EXTERIOR)
    phys = raster.physical(raster.origin + raster.h * act)
    total = np.zeros(len(act))
    count = np.zeros(len(act))
    tol = 1e-9 * raster.h / raster.scale
    sr = seed_field.raster
    for g, cell in zip(elements, domain.shape.cells):
        inside = np.ones(len(act), dtype=bool)
        for con, _pid in cell:
            inside &= con.level(phys) <= tol
        if not inside.any():
            continue
        pre = g.apply_inverse(gens, phys[inside]) * sr.scale
        total[inside] += g.parity * interpolate(sr, seed_field.u, pre)
        count[inside] += 1
    u = np.full(raster.dims, np.nan)
    vals = np.where(count > 0, total / np.maximum(count, 1), np.nan)
    u[tuple(act.T)] = vals
    collar = raster.node_class == COLLAR
    u[collar] = raster.collar_sign[collar] * cap
    missing = np.isnan(u) & (raster.node_class != EXTERIOR)
    if missing.any():
        # nodes just outside every copy: nearest copy through the interpolation fallback
        idx = np.argwhere(missing)
        p = raster.physical(raster.origin + raster.h * idx)
        dist = np.stack([np.max([con.level(p) for con, _ in cell], axis=0) for cell in domain.shape.cells])
        best = np.argmin(dist, axis=0)
        for j, (g, _cell) in enumerate(zip(elements, domain.shape.cells)):
            sel = best == j
            if sel.any():
                pre = g.apply_inverse(gens, p[sel]) * sr.scale
                u[tuple(idx[sel].T)] = g.parity * interpolate(sr, seed_field.u, pre)
    op = make_operator(raster, cfg)
    with np.errstate(all="ignore"):
        merit = float(op.merit(u.ravel().copy())) if op.m else 0.0
        grad = float(op.max_gradient(np.nan_to_num(u).ravel()))
    field = HeightField(raster, u, merit, seed_field.converged, seed_field.iterations,
                        list(seed_field.history), cap, grad)
    logger.info("assembled %d copies; residual %.3e", len(elements), merit)
    return field, seed_result


def adjacent_sign_pairs(domain: DomainSpec) -> list[tuple[int, int, int, int]]:
    """``(i, j, sign_i, sign_j)`` for every pair of faces sharing an (n-2)-cell."""
    from ..domains import faces_adjacent

    out = []
    ids = domain.piece_ids
    for a in range(len(ids)):
        for b in range(a + 1, len(ids)):
            if faces_adjacent(domain, ids[a], ids[b]):
                out.append((ids[a], ids[b], domain.piece(ids[a]).data.sign, domain.piece(ids[b]).data.sign))
    return out
