"""Damped Newton solver for Dirichlet problems of the minimal graph equation."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from ..config import SolverConfig
from ..errors import SolverFailure, UsageError
from ..raster import COLLAR, EXTERIOR, INTERIOR, RasterizedDomain
from .stencil import FluxOperator, GridOperator

logger = logging.getLogger(__name__)


@dataclass
class HeightField:
    """Node values of a discrete graph over a raster.

    ``u`` has the raster's shape and holds NaN at exterior nodes.
    """

    raster: RasterizedDomain
    u: np.ndarray
    residual_norm: float = 0.0
    converged: bool = True
    iterations: int = 0
    history: list = field(default_factory=list)
    cap: float | None = None
    max_gradient: float = 0.0

    @property
    def values(self) -> np.ndarray:
        return self.u

    def interior_values(self) -> np.ndarray:
        return self.u[self.raster.node_class == INTERIOR]

    def copy(self) -> "HeightField":
        return HeightField(self.raster, self.u.copy(), self.residual_norm, self.converged,
                           self.iterations, list(self.history), self.cap, self.max_gradient)


def _solve(A, b, n: int = 2):
    """Solve a linearized system.

    Planar problems use a direct sparse factorization.  Three-dimensional
    lattices fill in too much for SuperLU, so they use GMRES preconditioned by
    smoothed-aggregation AMG on ``-A`` (the operators have a negative diagonal).
    Both paths are deterministic.
    """
    if n < 3:
        return np.asarray(spla.spsolve(A, b), dtype=float)
    import pyamg

    B = -A.tocsr()
    ml = pyamg.smoothed_aggregation_solver(B, symmetry="nonsymmetric")
    x, info = spla.gmres(B, -np.asarray(b, dtype=float), M=ml.aspreconditioner(),
                         rtol=1e-11, atol=0.0, restart=60, maxiter=30)
    if info < 0:
        raise RuntimeError("GMRES breakdown")
    return np.asarray(x, dtype=float)


def make_operator(raster: RasterizedDomain, config: SolverConfig | None = None) -> GridOperator:
    """Discrete operator selected by ``config.scheme``."""
    scheme = (config or SolverConfig()).scheme
    return FluxOperator(raster) if scheme == "flux" else GridOperator(raster)


def laplace_guess(op: GridOperator, boundary_flat: np.ndarray) -> np.ndarray:
    """Solution of the discrete Laplace equation with the given boundary values."""
    u = boundary_flat.copy()
    if op.m:
        A, rhs = op.linear_system(None, boundary_flat)
        u[op.interior] = _solve(A, rhs, op.n)
    return u


def pointwise_residual(field_or_raster, u=None) -> np.ndarray:
    """Raw residual at every interior node (full array, NaN elsewhere)."""
    if isinstance(field_or_raster, HeightField):
        raster, u = field_or_raster.raster, field_or_raster.u
    else:
        raster = field_or_raster
    op = GridOperator(raster)
    out = np.full(raster.dims, np.nan)
    F, _ = op.residual(np.asarray(u, dtype=float).ravel())
    out.ravel()[op.interior] = F
    return out


def _check_finite_data(raster: RasterizedDomain, boundary: np.ndarray):
    bnd = (raster.node_class != EXTERIOR) & (raster.node_class != INTERIOR)
    if not np.all(np.isfinite(boundary[bnd])):
        raise UsageError("boundary values must be finite")


def solve_with_boundary(raster: RasterizedDomain, boundary: np.ndarray, config: SolverConfig | None = None,
                        initial: np.ndarray | None = None, cap: float | None = None) -> HeightField:
    """Newton solve with explicit boundary values (full array; collar entries included).

    Parameters
    ----------
    initial : array, optional
        Initial guess; only its interior entries are used. Defaults to the
        discrete Laplace solution.

    Raises
    ------
    SolverFailure
        When neither Newton nor the Picard fallback reaches ``newton_tol``.
    """
    cfg = config or SolverConfig()
    op = make_operator(raster, cfg)
    bflat = np.asarray(boundary, dtype=float).ravel().copy()
    _check_finite_data(raster, bflat.reshape(raster.dims))
    if initial is None:
        u = laplace_guess(op, bflat)
    else:
        u = bflat.copy()
        u[op.interior] = np.asarray(initial, dtype=float).ravel()[op.interior]
        if not np.all(np.isfinite(u[op.interior])):
            raise UsageError("initial guess must be finite at interior nodes")

    history = []
    tol = cfg.newton_tol
    merit = op.merit(u)
    history.append(merit)
    newton_steps = 0
    picard_left = cfg.picard_iters
    newton_left = cfg.max_iters

    def finish(converged: bool):
        return HeightField(raster, _with_nan(u, raster), merit, converged,
                           newton_steps, history, cap, op.max_gradient(u))

    while merit >= tol:
        # Newton phase: runs until convergence, a stall, or the iteration budget
        while merit >= tol and newton_left > 0:
            newton_left -= 1
            F = op.newton_residual(u)
            try:
                with np.errstate(all="ignore"):
                    delta = _solve(op.jacobian(u), -F, op.n)
            except RuntimeError:
                break
            if not np.all(np.isfinite(delta)):
                break
            step, accepted = 1.0, False
            for _ in range(cfg.max_halvings + 1):
                trial = u.copy()
                trial[op.interior] += step * delta
                with np.errstate(all="ignore"):
                    m_new = op.merit(trial)
                if np.isfinite(m_new) and m_new < merit:
                    accepted = True
                    break
                step *= cfg.damping
            if not accepted:
                break
            u, merit = trial, m_new
            newton_steps += 1
            history.append(merit)
            logger.debug("newton %d: step %.3g residual %.3e", newton_steps, step, merit)
        if merit < tol or picard_left <= 0:
            break
        # Picard phase: frozen coefficients; hand back to Newton after a 100x drop
        start, ok = merit, True
        while picard_left > 0 and merit >= tol:
            picard_left -= 1
            A, rhs = op.linear_system(u, bflat)
            try:
                with np.errstate(all="ignore"):
                    sol = _solve(A, rhs, op.n)
                    trial = u.copy()
                    trial[op.interior] = sol
                    m_new = op.merit(trial)
            except RuntimeError:
                ok = False
                break
            if not np.isfinite(m_new):
                ok = False
                break
            u, merit = trial, m_new
            history.append(merit)
            logger.debug("picard: residual %.3e", merit)
            if merit < 1e-2 * start and newton_left > 0:
                break
        if not ok:
            break

    if merit < tol:
        if newton_steps or initial is not None:
            u, merit = _polish(op, u, merit)
        return finish(True)
    failed = finish(False)
    raise SolverFailure(f"solver did not converge: residual {merit:.3e} after {len(history) - 1} iterations",
                        merit, failed.max_gradient, history, failed)


def _polish(op, u, merit):
    """One extra full Newton step after convergence, kept only if it does not increase the residual.

    Near saturated walls the residual is insensitive to the values, so the
    quadratic step removes error that the residual test alone would leave.
    """
    if not op.m:
        return u, merit
    try:
        with np.errstate(all="ignore"):
            delta = _solve(op.jacobian(u), -op.newton_residual(u), op.n)
    except RuntimeError:
        return u, merit
    if not np.all(np.isfinite(delta)):
        return u, merit
    trial = u.copy()
    trial[op.interior] += delta
    with np.errstate(all="ignore"):
        m_new = op.merit(trial)
    if np.isfinite(m_new) and m_new <= merit:
        return trial, m_new
    return u, merit


def _with_nan(u_flat, raster):
    out = u_flat.reshape(raster.dims).copy()
    out[raster.node_class == EXTERIOR] = np.nan
    return out


def solve_dirichlet(raster: RasterizedDomain, config: SolverConfig | None = None,
                    initial: np.ndarray | None = None) -> HeightField:
    """Solve the Dirichlet problem with the raster's finite boundary data."""
    if np.any(raster.node_class == COLLAR):
        raise UsageError("infinite boundary pieces need solve_capped_family")
    return solve_with_boundary(raster, raster.boundary_values(0.0), config, initial)
