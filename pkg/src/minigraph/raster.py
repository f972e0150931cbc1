"""Rasterization of domains onto uniform Cartesian lattices.

Lattice nodes sit at integer multiples of ``h`` so that coordinate planes
through the origin (``x_1 = 0`` in particular) are grid aligned, which makes
reflections across them map nodes onto nodes.

Node classes
------------
interior
    strictly inside the domain; the discrete equation is imposed there.
dirichlet
    a non-interior stencil neighbour of an interior node owned by a finite
    boundary piece; carries the piece's data.
collar
    the same, owned by a ``+inf`` / ``-inf`` piece; carries ``sign * cap``
    during capped sweeps.
exterior
    everything else.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from .domains import DomainSpec
from .errors import ResolutionError, UnsupportedDomainError, UsageError

logger = logging.getLogger(__name__)

EXTERIOR, INTERIOR, DIRICHLET, COLLAR = 0, 1, 2, 3
CLASS_NAMES = {EXTERIOR: "exterior", INTERIOR: "interior", DIRICHLET: "dirichlet", COLLAR: "collar"}


def stencil_offsets(n: int) -> list[tuple[int, ...]]:
    """Offsets of the compact stencil: axis neighbours and the diagonal pairs of the cross terms."""
    out = []
    for i in range(n):
        for s in (-1, 1):
            e = [0] * n
            e[i] = s
            out.append(tuple(e))
    for i, k in itertools.combinations(range(n), 2):
        for si, sk in itertools.product((-1, 1), repeat=2):
            e = [0] * n
            e[i], e[k] = si, sk
            out.append(tuple(e))
    return out


@dataclass
class RasterizedDomain:
    """Node classification of a domain on the lattice ``origin + h * index``.

    Coordinates are *grid* coordinates; for repositioned hyperbolic domains the
    physical (input) coordinates are ``grid / scale``.
    """

    space: str
    n: int
    h: float
    origin: np.ndarray
    dims: tuple
    node_class: np.ndarray
    values: np.ndarray
    collar_sign: np.ndarray
    owner: np.ndarray
    inf_distance: np.ndarray
    snapped: dict = field(repr=False)
    scale: float = 1.0
    domain: DomainSpec | None = field(default=None, repr=False)
    delta: float = 0.0

    # -- geometry helpers ------------------------------------------------------
    def axes(self) -> list[np.ndarray]:
        return [self.origin[i] + self.h * np.arange(self.dims[i]) for i in range(self.n)]

    def coords(self, flat_index=None) -> np.ndarray:
        """Grid coordinates of the given flat indices (all nodes by default)."""
        if flat_index is None:
            flat_index = np.arange(int(np.prod(self.dims)))
        idx = np.array(np.unravel_index(np.asarray(flat_index), self.dims)).T
        return self.origin + self.h * idx

    def physical(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x) / self.scale

    @property
    def interior_count(self) -> int:
        return int(np.count_nonzero(self.node_class == INTERIOR))

    @property
    def active(self) -> np.ndarray:
        return self.node_class != EXTERIOR

    def nodes_of(self, cls: int) -> np.ndarray:
        return np.flatnonzero(self.node_class.ravel() == cls)

    def boundary_values(self, cap: float = 0.0) -> np.ndarray:
        """Full value array: Dirichlet data, ``sign * cap`` on the collar, NaN elsewhere."""
        v = self.values.copy()
        collar = self.node_class == COLLAR
        v[collar] = self.collar_sign[collar] * cap
        return v

    def core_mask(self, margin: float) -> np.ndarray:
        """Interior nodes at grid distance >= ``margin`` from every infinite face."""
        return (self.node_class == INTERIOR) & (self.inf_distance >= margin)

    def same_layout(self, other: "RasterizedDomain") -> bool:
        return (self.dims == other.dims and np.allclose(self.origin, other.origin)
                and self.h == other.h and np.array_equal(self.node_class, other.node_class))


def _lattice(lo, hi, h, pad=2):
    start = np.floor(lo / h).astype(int) - pad
    stop = np.ceil(hi / h).astype(int) + pad
    dims = tuple(int(b - a + 1) for a, b in zip(start, stop))
    return start * h, dims


def rasterize(domain: DomainSpec, h: float, delta: float = 0.05, min_across: int = 5) -> RasterizedDomain:
    """Classify lattice nodes of spacing ``h`` for ``domain``.

    Hyperbolic domains are dilated about the origin (an isometry of the
    half-space model) when needed so that every node has ``x_n >= delta``.

    Raises
    ------
    UnsupportedDomainError
        The domain reaches the ideal boundary ``x_n <= 0``.
    ResolutionError
        Some axis has fewer than ``min_across`` interior nodes on every grid line.
    UsageError
        Missing boundary data.
    """
    if not h > 0:
        raise UsageError("grid spacing must be positive")
    for p in domain.pieces:
        if p.data is None:
            raise UsageError(f"boundary piece {p.id} has no data")
    n = domain.n
    lo, hi = (np.asarray(b, dtype=float) for b in domain.shape.bbox)
    scale = 1.0
    if domain.space == "hyperbolic":
        if not lo[-1] > 0.0:
            raise UnsupportedDomainError("domain meets the ideal boundary x_n = 0")
        need = delta + 1.5 * h
        if lo[-1] < need:
            scale = need / lo[-1]
            logger.info("dilating domain by %.6g to keep nodes above x_n = %g", scale, delta)
    origin, dims = _lattice(lo * scale, hi * scale, h)
    total = int(np.prod(dims))
    grid_idx = np.indices(dims).reshape(n, -1).T
    x_grid = origin + h * grid_idx
    x_phys = x_grid / scale

    tol_b = 1e-9 * h / scale
    tol_i = 1e-9 * h / scale
    cells = domain.shape.cells
    interior = np.zeros(total, dtype=bool)
    cell_violation = np.empty((len(cells), total))
    for c, cell in enumerate(cells):
        ok = np.ones(total, dtype=bool)
        worst = np.full(total, -np.inf)
        for con, pid in cell:
            lev = con.level(x_phys)
            worst = np.maximum(worst, lev)
            ok &= (lev < -tol_b) if pid is not None else (lev <= tol_i)
        interior |= ok
        cell_violation[c] = worst
    if domain.space == "hyperbolic":
        interior &= x_grid[:, -1] > 0

    interior_nd = interior.reshape(dims)
    near = np.zeros(dims, dtype=bool)
    for off in stencil_offsets(n):
        near |= _shift(interior_nd, off)
    boundary = near.ravel() & ~interior
    bidx = np.flatnonzero(boundary)

    node_class = np.zeros(total, dtype=np.int8)
    node_class[interior] = INTERIOR
    values = np.full(total, np.nan)
    collar_sign = np.zeros(total, dtype=np.int8)
    owner = np.full(total, -1, dtype=np.int32)

    xb = x_phys[bidx]
    nearest_cell = np.argmin(cell_violation[:, bidx], axis=0)
    best_level = np.full(len(bidx), -np.inf)
    best_pid = np.full(len(bidx), -1, dtype=np.int64)
    snapped_b = np.full_like(xb, np.nan)
    for c, cell in enumerate(cells):
        sel = nearest_cell == c
        if not sel.any():
            continue
        for con, pid in cell:
            if pid is None:
                continue
            lev = con.level(xb[sel])
            cur_l = best_level[sel]
            cur_p = best_pid[sel]
            take = (lev > cur_l + 1e-12 * h) | ((np.abs(lev - cur_l) <= 1e-12 * h) & (pid < cur_p))
            new_l = np.where(take, lev, cur_l)
            new_p = np.where(take, pid, cur_p)
            proj = con.project(xb[sel])
            cur_s = snapped_b[sel]
            cur_s[take] = proj[take]
            best_level[sel] = new_l
            best_pid[sel] = new_p
            snapped_b[sel] = cur_s
    owner[bidx] = best_pid
    for p in domain.pieces:
        sel = best_pid == p.id
        if not sel.any():
            continue
        ids = bidx[sel]
        if p.data.infinite:
            node_class[ids] = COLLAR
            collar_sign[ids] = p.data.sign
        else:
            node_class[ids] = DIRICHLET
            values[ids] = p.data.evaluate(x_phys[ids], snapped_b[sel])
    if np.any(best_pid < 0):
        raise UsageError("boundary node without an owning piece")
    bad = (node_class == DIRICHLET) & ~np.isfinite(values)
    if bad.any():
        raise UsageError("boundary data is not finite at some Dirichlet nodes")

    inf_distance = np.full(total, np.inf)
    inf_ids = set(domain.infinite_pieces())
    if inf_ids:
        for con, pid in domain.boundary_constraints():
            if pid in inf_ids:
                inf_distance = np.minimum(inf_distance, np.abs(con.level(x_phys)) * scale)

    if domain.space == "hyperbolic":
        active = node_class != EXTERIOR
        if active.any() and x_grid[active, -1].min() < delta - 1e-12:
            raise UnsupportedDomainError("nodes fall below the minimum height")

    node_class = node_class.reshape(dims)
    _check_resolution(node_class, min_across)
    return RasterizedDomain(
        space=domain.space, n=n, h=float(h), origin=origin, dims=dims,
        node_class=node_class, values=values.reshape(dims), collar_sign=collar_sign.reshape(dims),
        owner=owner.reshape(dims), inf_distance=inf_distance.reshape(dims),
        snapped={int(i): s for i, s in zip(bidx, snapped_b * scale)},
        scale=scale, domain=domain, delta=delta,
    )


def _shift(a: np.ndarray, off) -> np.ndarray:
    """``out[i] = a[i + off]`` with False outside."""
    out = np.zeros_like(a)
    src = []
    dst = []
    for o, size in zip(off, a.shape):
        if o >= 0:
            src.append(slice(o, size))
            dst.append(slice(0, size - o))
        else:
            src.append(slice(0, size + o))
            dst.append(slice(-o, size))
    out[tuple(dst)] = a[tuple(src)]
    return out


def _check_resolution(node_class: np.ndarray, min_across: int):
    inside = node_class == INTERIOR
    if not inside.any():
        raise ResolutionError("no interior nodes")
    for ax in range(inside.ndim):
        best = _longest_run(inside, ax)
        if best < min_across:
            raise ResolutionError(f"only {best} interior nodes across axis {ax + 1}; refine the grid")


def _longest_run(mask: np.ndarray, axis: int) -> int:
    m = np.moveaxis(mask, axis, -1).reshape(-1, mask.shape[axis]).astype(np.int32)
    run = np.zeros(m.shape[0], dtype=np.int32)
    best = 0
    for j in range(m.shape[1]):
        run = (run + 1) * m[:, j]
        best = max(best, int(run.max()))
    return best


def from_arrays(template: RasterizedDomain, node_class, values, collar_sign=None) -> RasterizedDomain:
    """A raster with the template's lattice and new classification and data."""
    return RasterizedDomain(
        space=template.space, n=template.n, h=template.h, origin=template.origin.copy(), dims=template.dims,
        node_class=np.asarray(node_class, dtype=np.int8), values=np.asarray(values, dtype=float),
        collar_sign=np.zeros(template.dims, np.int8) if collar_sign is None else collar_sign,
        owner=np.full(template.dims, -1, np.int32), inf_distance=np.full(template.dims, np.inf),
        snapped={}, scale=template.scale, domain=template.domain, delta=template.delta,
    )
