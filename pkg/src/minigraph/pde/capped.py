"""Capped sweeps realizing infinite boundary values as limits of finite caps."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..config import SolverConfig
from ..errors import ConsistencyError, NonConvergenceError, SolverFailure, UsageError
from ..raster import COLLAR, RasterizedDomain
from .solver import HeightField, solve_with_boundary

logger = logging.getLogger(__name__)


@dataclass
class CappedResult:
    """Outcome of a capped sweep.

    Attributes
    ----------
    fields : list of HeightField
        One converged field per cap, in schedule order.
    caps : list of float
    cauchy : list of float
        ``max |u_{k+1} - u_k|`` over the core mask, one entry per consecutive pair.
    core_mask : ndarray of bool
        Interior nodes at distance at least ``margin * h`` from every infinite face.
    core : ndarray
        Last field on the core mask, NaN elsewhere.
    extrapolated : ndarray
        ``u_K + d_K r / (1 - r)`` with the last observed contraction ratio ``r``
        (equal to ``core`` when no ratio below one is available).
    accepted : bool
        Last Cauchy difference below ``config.cauchy_tol``.
    monotone_margin : float
        Smallest ``u_{k+1} - u_k`` over interior nodes, sign-adjusted for ``-inf`` sweeps.
    """

    fields: list
    caps: list
    cauchy: list
    core_mask: np.ndarray
    core: np.ndarray
    extrapolated: np.ndarray
    accepted: bool
    monotone_margin: float = np.inf
    ratios: list = field(default_factory=list)

    @property
    def last(self) -> HeightField:
        return self.fields[-1]


def _solve_cap(raster, cap, cfg, initial, prev_cap, depth=0):
    boundary = raster.boundary_values(cap)
    try:
        return solve_with_boundary(raster, boundary, cfg, initial, cap=cap)
    except SolverFailure:
        if not cfg.continuation or initial is None or depth >= 6 or prev_cap is None:
            raise
    mid = 0.5 * (prev_cap + cap)
    logger.info("cap %.6g failed from %.6g; continuing through %.6g", cap, prev_cap, mid)
    half = _solve_cap(raster, mid, cfg, initial, prev_cap, depth + 1)
    return _solve_cap(raster, cap, cfg, half.u, mid, depth + 1)


def _monotone_margin(raster: RasterizedDomain, a: np.ndarray, b: np.ndarray):
    """Smallest sign-adjusted increase ``s * (b - a)`` over interior nodes, and its node."""
    signs = np.unique(raster.collar_sign[raster.node_class == COLLAR])
    if len(signs) != 1:
        return np.inf, None
    diff = signs[0] * (b - a)
    inner = raster.node_class == 1
    d = np.where(inner, diff, np.inf)
    idx = int(np.argmin(d))
    return float(d.ravel()[idx]), np.unravel_index(idx, raster.dims)


def solve_capped_family(raster: RasterizedDomain, config: SolverConfig | None = None,
                        caps=None, check_nonconvergence: bool = True) -> CappedResult:
    """Solve the finite Dirichlet problems with ``+-inf`` pieces replaced by ``+-t_k``.

    Each cap is warm-started from the previous one.  Monotonicity is enforced
    only when all infinite pieces carry the same sign.

    Raises
    ------
    UsageError
        The raster has no infinite piece.
    ConsistencyError
        A node decreases by more than ``10 * newton_tol`` between caps.
    NonConvergenceError
        The last three core Cauchy differences are non-decreasing.
    SolverFailure
        Propagated from a cap solve.
    """
    cfg = config or SolverConfig()
    if not np.any(raster.node_class == COLLAR):
        raise UsageError("capped sweep needs at least one infinite boundary piece")
    caps = list(cfg.caps() if caps is None else caps)
    if not caps:
        raise UsageError("empty cap schedule")
    fields: list[HeightField] = []
    prev, prev_cap = None, None
    worst = np.inf
    for t in caps:
        f = _solve_cap(raster, t, cfg, None if prev is None else prev.u, prev_cap)
        logger.info("cap %.6g: %d Newton steps, residual %.3e", t, f.iterations, f.residual_norm)
        if prev is not None:
            margin, node = _monotone_margin(raster, prev.u, f.u)
            worst = min(worst, margin)
            if margin < -cfg.slack:
                raise ConsistencyError(
                    f"cap sweep not monotone between caps {prev_cap:g} and {t:g}: decrease {-margin:.3e}",
                    witness={"node": tuple(int(i) for i in node), "before": float(prev.u[node]),
                             "after": float(f.u[node])})
        fields.append(f)
        prev, prev_cap = f, t

    core_mask = raster.core_mask(cfg.margin * raster.h)
    cauchy = []
    for a, b in zip(fields[:-1], fields[1:]):
        d = np.abs(b.u - a.u)[core_mask]
        cauchy.append(float(d.max()) if d.size else 0.0)
    ratios = [b / a if a > 0 else 0.0 for a, b in zip(cauchy[:-1], cauchy[1:])]
    core = np.where(core_mask, fields[-1].u, np.nan)
    extrap = core.copy()
    if len(fields) >= 3 and ratios and 0 < ratios[-1] < 1:
        r = ratios[-1]
        step = fields[-1].u - fields[-2].u
        extrap = np.where(core_mask, fields[-1].u + step * r / (1 - r), np.nan)
    accepted = bool(cauchy) and cauchy[-1] < cfg.cauchy_tol
    result = CappedResult(fields, caps, cauchy, core_mask, core, extrap, accepted, worst, ratios)
    if check_nonconvergence and len(cauchy) >= 3:
        c1, c2, c3 = cauchy[-3:]
        if c1 <= c2 <= c3 and c3 > cfg.slack:
            raise NonConvergenceError(
                f"core Cauchy differences stopped decreasing: {c1:.3e}, {c2:.3e}, {c3:.3e}", result)
    return result
