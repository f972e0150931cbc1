"""Executable checks of comparison, barrier, monotonicity and threshold statements.

Every check returns a :class:`CheckReport`.  ``margin`` is signed: positive
means the inequality holds with that much room, negative that it is violated
by that much.  A check passes when ``margin >= -tol``, where ``tol`` is the
uniform slack ``10 * newton_tol`` unless stated otherwise.
"""

from __future__ import annotations

import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .config import SolverConfig
from .domains import plane_side
from .errors import NonConvergenceError, SolverFailure
from .geometry import hyp_dist_array
from .raster import COLLAR, DIRICHLET, EXTERIOR, INTERIOR, rasterize
from .surfaces import (catenoid_height, catenoid_height_deficit, catenoid_profile_many, height_limit,
                       m1_height, m1_height_many, translation_height, translation_height_excess)

logger = logging.getLogger(__name__)

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"


@dataclass
class CheckReport:
    """Outcome of one check; a failure carries a witness (node index and values)."""

    check_id: str
    status: str
    margin: float
    tol: float
    witness: dict | None = None
    note: str = ""
    details: dict = field(default_factory=dict)

    @property
    def failed(self) -> bool:
        return self.status == FAIL

    def witness_text(self) -> str:
        if not self.witness:
            return "none"
        return ";".join(f"{k}={_fmt(v)}" for k, v in self.witness.items())

    def line(self) -> str:
        text = (f"CHECK {self.check_id} {self.status} margin={_fmt(self.margin)} tol={_fmt(self.tol)} "
                f"witness={self.witness_text()}")
        return text + (f" note={self.note.replace(' ', '_')}" if self.note else "")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["witness"] = {k: _jsonable(v) for k, v in (self.witness or {}).items()} or None
        d["details"] = {k: _jsonable(v) for k, v in self.details.items()}
        d["margin"] = _jsonable(self.margin)
        return d


def _fmt(v) -> str:
    if isinstance(v, (tuple, list)):
        return "(" + ",".join(_fmt(x) for x in v) + ")"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v).replace(" ", "_")


def _jsonable(v):
    if isinstance(v, (tuple, list)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    if isinstance(v, np.integer):
        return int(v)
    return v


def _node(idx) -> tuple:
    return tuple(int(i) for i in idx)


def _status(margin: float, tol: float) -> str:
    return PASS if margin >= -tol else FAIL


def format_reports(reports) -> str:
    return "".join(r.line() + "\n" for r in reports)


def summary_json(reports) -> str:
    """Machine-readable mirror of the report lines."""
    body = {"checks": [r.to_dict() for r in reports],
            "failed": sum(r.failed for r in reports),
            "inconclusive": sum(r.status == INCONCLUSIVE for r in reports)}
    return json.dumps(body, indent=2, sort_keys=True) + "\n"


def max_workers() -> int:
    """Worker cap from ``MINIGRAPH_THREADS`` (default: CPU count)."""
    raw = os.environ.get("MINIGRAPH_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            logger.warning("ignoring MINIGRAPH_THREADS=%r", raw)
    return os.cpu_count() or 1


def run_checks(jobs: list[Callable[[], CheckReport]]) -> list[CheckReport]:
    """Run independent checks concurrently; results keep submission order."""
    if len(jobs) <= 1 or max_workers() == 1:
        return [job() for job in jobs]
    with ThreadPoolExecutor(max_workers=min(max_workers(), len(jobs))) as pool:
        futures = [pool.submit(job) for job in jobs]
        return [f.result() for f in futures]


# -- maximum principle and comparison ------------------------------------------------------


def _boundary_range(field_):
    r = field_.raster
    vals = [r.values[r.node_class == DIRICHLET]]
    collar = r.node_class == COLLAR
    if collar.any():
        vals.append(field_.u[collar])
    data = np.concatenate(vals)
    return float(np.min(data)), float(np.max(data))


def max_principle(field_, config: SolverConfig | None = None, check_id: str = "max-principle") -> CheckReport:
    """``min g - tol <= u <= max g + tol`` at every interior node."""
    tol = (config or SolverConfig()).slack
    lo, hi = _boundary_range(field_)
    inner = field_.raster.node_class == INTERIOR
    room = np.where(inner, np.minimum(field_.u - lo, hi - field_.u), np.inf)
    idx = np.unravel_index(int(np.argmin(room)), room.shape)
    margin = float(room[idx])
    status = _status(margin, tol)
    witness = {"node": _node(idx), "value": float(field_.u[idx]), "data_min": lo, "data_max": hi}
    return CheckReport(check_id, status, margin, tol, witness if status == FAIL else None,
                       details={"data_min": lo, "data_max": hi})


def corrupt_field(field_, config: SolverConfig | None = None, node=None, factor: float = 100.0):
    """Copy with one interior node raised by ``factor * newton_tol`` (harness self-test).

    The default node is the interior node with the largest value, so that a
    field sitting at its upper data bound is pushed outside it.
    """
    tol = (config or SolverConfig()).newton_tol
    out = field_.copy()
    if node is None:
        vals = np.where(out.raster.node_class == INTERIOR, out.u, -np.inf)
        node = np.unravel_index(int(np.argmax(vals)), vals.shape)
    out.u[tuple(node)] += factor * tol
    return out, _node(node)


def comparison(lower, upper, config: SolverConfig | None = None, check_id: str = "comparison") -> CheckReport:
    """``u_lower <= u_upper + tol`` at every node active in both fields."""
    tol = (config or SolverConfig()).slack
    both = (lower.raster.node_class != EXTERIOR) & (upper.raster.node_class != EXTERIOR)
    gap = np.where(both, upper.u - lower.u, np.inf)
    idx = np.unravel_index(int(np.argmin(gap)), gap.shape)
    margin = float(gap[idx])
    status = _status(margin, tol)
    witness = {"node": _node(idx), "lower": float(lower.u[idx]), "upper": float(upper.u[idx])}
    return CheckReport(check_id, status, margin, tol, witness if status == FAIL else None)


# -- barrier sandwiches -------------------------------------------------------------------------


def sandwich(field_, lower: Callable, upper: Callable, tol: float, check_id: str,
             nodes=None, data_nodes=None) -> CheckReport:
    """``lower <= u <= upper`` on ``nodes`` after checking the same order on the data.

    ``lower`` and ``upper`` map physical coordinates to barrier heights.  When
    the boundary data at ``data_nodes`` is not between the barriers the
    comparison argument does not apply and the report is inconclusive.
    """
    r = field_.raster
    if nodes is None:
        nodes = r.node_class == INTERIOR
    if data_nodes is None:
        data_nodes = r.node_class == DIRICHLET
    data = r.boundary_values(field_.cap or 0.0)
    if data_nodes.any():
        idx = np.argwhere(data_nodes)
        x = r.physical(r.origin + r.h * idx)
        g = data[tuple(idx.T)]
        lo, hi = lower(x), upper(x)
        room = np.minimum(g - lo, hi - g)
        k = int(np.argmin(room))
        if room[k] < -tol:
            return CheckReport(check_id, INCONCLUSIVE, float(room[k]), tol,
                               {"node": _node(idx[k]), "data": float(g[k]), "lower": float(lo[k]),
                                "upper": float(hi[k])}, note="boundary data not between the barriers")
    idx = np.argwhere(nodes)
    if len(idx) == 0:
        return CheckReport(check_id, INCONCLUSIVE, math.nan, tol, note="no nodes in the barrier region")
    x = r.physical(r.origin + r.h * idx)
    u = field_.u[tuple(idx.T)]
    lo, hi = lower(x), upper(x)
    room = np.minimum(u - lo, hi - u)
    k = int(np.argmin(room))
    margin = float(room[k])
    status = _status(margin, tol)
    witness = {"node": _node(idx[k]), "value": float(u[k]), "lower": float(lo[k]), "upper": float(hi[k])}
    return CheckReport(check_id, status, margin, tol, witness if status == FAIL else None,
                       details={"nodes": int(len(idx))})


def barrier_sandwich_m1(field_, plane, c_minus: float, c_plus: float, config: SolverConfig | None = None,
                        side_marker=None, max_rho: float | None = None,
                        check_id: str = "barrier-m1") -> CheckReport:
    """``c_minus - h(rho) <= u <= c_plus + h(rho)`` on the collar of ``plane``.

    ``h`` is the M_1 height and ``rho`` the hyperbolic distance to ``plane``
    on the side of ``side_marker`` (by default the side holding most interior
    nodes).  Both barriers are vertical translates of the M_1 graph or of
    its reflection ``-h``, hence minimal graphs.  Nodes with ``rho <= 0`` or
    ``rho > max_rho`` are outside the collar.
    """
    tol = (config or SolverConfig()).slack
    r = field_.raster
    n = r.n
    if side_marker is None:
        inner = r.physical(r.coords(r.nodes_of(INTERIOR)))
        sign = float(np.sign(np.median(plane_side(plane, inner)))) or 1.0
    else:
        sign = float(np.sign(plane_side(plane, np.atleast_2d(side_marker))[0])) or 1.0

    def rho(x):
        return np.arcsinh(sign * plane_side(plane, x))

    every = np.argwhere(r.node_class != EXTERIOR)
    rho_all = rho(r.physical(r.origin + r.h * every))
    ok = rho_all > 0
    if max_rho is not None:
        ok &= rho_all <= max_rho
    if not ok.any():
        return CheckReport(check_id, INCONCLUSIVE, math.nan, tol, note="no nodes in the collar")
    anchor = float(rho_all[ok].max())

    def height(x):
        return m1_height_many(n, rho(x), anchor=anchor)

    mask = np.zeros(r.dims, dtype=bool)
    mask[tuple(every[ok].T)] = True
    return sandwich(field_, lambda x: c_minus - height(x), lambda x: c_plus + height(x), tol, check_id,
                    nodes=mask & (r.node_class == INTERIOR), data_nodes=mask & (r.node_class == DIRICHLET))


# -- rotational Scherk monotonicity ----------------------------------------------------------


def _monotone_along(values: np.ndarray, direction: int) -> tuple[float, int]:
    """Smallest ``direction * (v_{k+1} - v_k)`` and its index."""
    steps = direction * np.diff(values)
    k = int(np.argmin(steps))
    return float(steps[k]), k


def scherk_axis_monotonicity(field_, config: SolverConfig | None = None, samples: int = 48,
                             expect_sign: int | None = None, check_id: str = "scherk-axis") -> CheckReport:
    """Monotonicity of a rotational Scherk field along the axis and across it.

    With ``U_Sigma`` at ``-cap`` the field decreases along ``[A_0, B]`` and
    increases along the geodesic ``[D, C]`` leaving the axis orthogonally at
    the hyperbolic midpoint ``D`` of ``[A_0, B]`` and ending on ``Sigma``.
    The directions reverse when ``U_Sigma`` carries ``+cap``; ``expect_sign``
    overrides the sign read from the domain.
    """
    from .pde.interp import interpolate

    tol = (config or SolverConfig()).slack
    r = field_.raster
    dom = r.domain
    if not field_.converged:
        return CheckReport(check_id, INCONCLUSIVE, math.nan, tol, note="field not converged")
    if dom is None or dom.shape.kind != "rotational":
        return CheckReport(check_id, INCONCLUSIVE, math.nan, tol, note="not a rotational domain")
    geo = dom.shape.params["geometry"]
    sign = expect_sign if expect_sign is not None else (dom.piece(1).data.sign or -1)
    # along the axis: A0 -> B, avoiding the end points where the data jumps
    z = geo.a0 * (geo.b / geo.a0) ** np.linspace(0.0, 1.0, samples + 2)[1:-1]
    axis_pts = np.column_stack([np.tile(geo.axis, (samples, 1)), z])
    v_axis = interpolate(r, field_.u, axis_pts * r.scale)
    m_axis, k_axis = _monotone_along(v_axis, sign)
    # across: hemisphere of radius D_n about the axis foot, from D to the cone
    dn = math.sqrt(geo.a0 * geo.b)
    s = geo.slope
    # r^2 + (a0 + s r)^2 = dn^2
    qa, qb, qc = 1 + s * s, 2 * s * geo.a0, geo.a0**2 - dn**2
    r_c = (-qb + math.sqrt(qb * qb - 4 * qa * qc)) / (2 * qa)
    theta_c = math.atan2(r_c, geo.a0 + s * r_c)
    theta = np.linspace(0.0, theta_c, samples + 2)[:-1]
    e1 = np.zeros(r.n - 1)
    e1[0] = 1.0
    arc = np.column_stack([geo.axis + dn * np.sin(theta)[:, None] * e1, dn * np.cos(theta)])
    v_arc = interpolate(r, field_.u, arc * r.scale)
    m_arc, k_arc = _monotone_along(v_arc, -sign)
    if not (np.all(np.isfinite(v_axis)) and np.all(np.isfinite(v_arc))):
        return CheckReport(check_id, INCONCLUSIVE, math.nan, tol, note="samples fall on nodes without values")
    margin = min(m_axis, m_arc)
    status = _status(margin, tol)
    witness = None
    if status == FAIL:
        if m_axis <= m_arc:
            witness = {"segment": "A0B", "sample": k_axis, "point": tuple(axis_pts[k_axis]),
                       "values": (float(v_axis[k_axis]), float(v_axis[k_axis + 1]))}
        else:
            witness = {"segment": "DC", "sample": k_arc, "point": tuple(arc[k_arc]),
                       "values": (float(v_arc[k_arc]), float(v_arc[k_arc + 1]))}
    direction = "decreasing-then-increasing" if sign < 0 else "increasing-then-decreasing"
    return CheckReport(check_id, status, margin, tol, witness, note=direction,
                       details={"axis_margin": m_axis, "arc_margin": m_arc, "sign": sign})


# -- threshold probe ---------------------------------------------------------------------------


def _neighbours(mask: np.ndarray) -> np.ndarray:
    """Nodes with an axis neighbour in ``mask``."""
    out = np.zeros_like(mask)
    for ax in range(mask.ndim):
        for s in (1, -1):
            out |= np.roll(mask, s, axis=ax) & _no_wrap(mask.shape, ax, s)
    return out


def _no_wrap(shape, ax: int, s: int) -> np.ndarray:
    keep = np.ones(shape, dtype=bool)
    edge = [slice(None)] * len(shape)
    edge[ax] = 0 if s > 0 else -1
    keep[tuple(edge)] = False
    return keep


def _sphere_jump(field_) -> float:
    """Largest value jump between a zero-data sphere node and an interior axis neighbour."""
    r = field_.raster
    sphere = (r.node_class == DIRICHLET) & (r.owner == 0)
    jump = 0.0
    for ax in range(r.n):
        for s in (1, -1):
            sl_a = [slice(None)] * r.n
            sl_b = [slice(None)] * r.n
            if s > 0:
                sl_a[ax], sl_b[ax] = slice(0, -1), slice(1, None)
            else:
                sl_a[ax], sl_b[ax] = slice(1, None), slice(0, -1)
            a, b = tuple(sl_a), tuple(sl_b)
            m = sphere[a] & (r.node_class[b] == INTERIOR)
            if m.any():
                jump = max(jump, float(np.max(np.abs(field_.u[b][m] - field_.u[a][m]))))
    return jump


def threshold_domain(rho0: float, t: float, n: int, clip_distance: float = 2.5):
    """Canonical exterior domain whose clip faces lie at distance >= ``clip_distance`` from the ball."""
    from .domains import exterior_domain_canonical

    L = float(clip_distance)
    half = math.sinh(L)
    lo = np.append(np.full(n - 1, -half), math.exp(-L))
    hi = np.append(np.full(n - 1, half), math.exp(L))
    return exterior_domain_canonical(rho0, lo, hi, t)


def height_threshold_probe(rho0: float, t: float, n: int, config: SolverConfig | None = None,
                           h: float = 0.05, delta: float = 0.01, clip_distance: float = 2.5,
                           refine: bool = True, check_id: str = "threshold") -> CheckReport:
    """Existence/nonexistence evidence for constant asymptotic data ``t`` outside a ball.

    For ``|t| <= R(rho0)`` the solve must converge and lie between the
    catenoid barriers ``omega + max(0, t - min_clip omega)`` and
    ``omega - (R(rho0) - t)`` (mirrored for ``t < 0``), where ``omega`` is
    the catenoid with neck on the sphere.  Interior nodes adjacent to a
    sphere node are excluded since the neck is vertical there.  For ``|t| > pi/(2n-2)`` the
    expected outcome is a solver failure or a boundary gradient blow-up at
    the sphere: a jump larger than 1 between a sphere node and its
    neighbour (gradient above ``1/h``), or a jump that does not decay when
    ``h`` is halved (gradient growing like ``1/h``).  The band in between is
    reported inconclusive without solving.
    """
    from .pde.solver import solve_dirichlet

    cfg = config or SolverConfig()
    tol = cfg.slack
    R = catenoid_height(rho0, n).value
    limit = height_limit(n)
    at = abs(t)
    details = {"R(rho0)": R, "limit": limit, "t": float(t), "h": h}
    if R < at <= limit:
        return CheckReport(check_id, INCONCLUSIVE, math.nan, tol, note="band between R(rho0) and pi/(2n-2)",
                           details=details)
    dom = threshold_domain(rho0, t, n, clip_distance)
    raster = rasterize(dom, h, delta)
    if at <= R:
        try:
            f = solve_dirichlet(raster, cfg)
        except SolverFailure as exc:
            return CheckReport(check_id, FAIL, math.nan, tol, {"residual": exc.residual_norm},
                               note="solver failed where existence is expected", details=details)
        center = dom.shape.params["center"]
        s = 1.0 if t >= 0 else -1.0

        def omega(x):
            d = hyp_dist_array(np.asarray(x), center[None, :])
            return catenoid_profile_many(rho0, np.maximum(d, rho0), n)

        clip = (raster.node_class == DIRICHLET) & (raster.owner == 1)
        clip_x = raster.physical(raster.coords(np.flatnonzero(clip.ravel())))
        shift = max(0.0, at - float(np.min(omega(clip_x))))

        def upper(x):
            return s * (omega(x) + shift) if s > 0 else s * (omega(x) - (R - at))

        def lower(x):
            return s * (omega(x) - (R - at)) if s > 0 else s * (omega(x) + shift)

        # The neck of omega is vertical on the sphere; the first node layer next to
        # sphere nodes cannot follow that and is left out of the node-wise check.
        sphere = (raster.node_class == DIRICHLET) & (raster.owner == 0)
        layer = _neighbours(sphere) & (raster.node_class == INTERIOR)
        nodes = (raster.node_class == INTERIOR) & ~layer
        rep = sandwich(f, lower, upper, tol, check_id, nodes=nodes)
        details["boundary_layer_nodes"] = int(layer.sum())
        rep.note = "consistent-with-existence" if rep.status == PASS else rep.note or "barrier sandwich violated"
        rep.details.update(details, shift=shift, iterations=f.iterations)
        return rep
    # nonexistence regime
    jumps = []
    spacing = h
    for level in range(2 if refine else 1):
        r_level = raster if level == 0 else rasterize(dom, spacing, delta)
        try:
            f = solve_dirichlet(r_level, cfg)
        except SolverFailure as exc:
            details["jumps"] = jumps
            return CheckReport(check_id, PASS, exc.residual_norm, tol, {"h": spacing, "residual": exc.residual_norm},
                               note="consistent-with-nonexistence (solver failure)", details=details)
        jump = _sphere_jump(f)
        jumps.append(jump)
        if jump > 1.0:
            details["jumps"] = jumps
            return CheckReport(check_id, PASS, jump - 1.0, tol, {"h": spacing, "jump": jump},
                               note="consistent-with-nonexistence (gradient above 1/h)", details=details)
        spacing *= 0.5
    details["jumps"] = jumps
    if len(jumps) == 2:
        ratio = jumps[1] / jumps[0] if jumps[0] > 0 else 0.0
        details["ratio"] = ratio
        if ratio >= 0.85:
            return CheckReport(check_id, PASS, ratio - 0.85, tol, {"jumps": tuple(jumps), "ratio": ratio},
                               note="consistent-with-nonexistence (boundary jump persists under refinement)",
                               details=details)
        return CheckReport(check_id, FAIL, ratio - 0.85, tol, {"jumps": tuple(jumps), "ratio": ratio},
                           note="boundary jump decays; no sign of nonexistence", details=details)
    return CheckReport(check_id, INCONCLUSIVE, math.nan, tol, {"jumps": tuple(jumps)},
                       note="no failure at a single resolution", details=details)


# -- reflection ----------------------------------------------------------------------------------


def reflection_consistency(field_, plane, config: SolverConfig | None = None,
                           check_id: str = "reflection") -> CheckReport:
    """Odd extension against a direct solve on the doubled domain with odd data."""
    from .pde.reflect import odd_solve, reflect_extend

    cfg = config or SolverConfig()
    tol = cfg.slack
    # the odd extension is only a solution when the data vanishes on the mirror,
    # including where the other pieces meet it
    r = field_.raster
    idx = np.argwhere(r.node_class == DIRICHLET)
    on = np.abs(plane_side(plane, r.physical(r.origin + r.h * idx))) <= 1e-9 * r.h
    if on.any():
        g = r.values[tuple(idx[on].T)]
        k = int(np.argmax(np.abs(g)))
        if abs(g[k]) > tol:
            return CheckReport(check_id, INCONCLUSIVE, -float(abs(g[k])), tol,
                               {"node": _node(idx[on][k]), "data": float(g[k])},
                               note="boundary data nonzero on the mirror")
    ext = reflect_extend(field_, plane, cfg)
    try:
        direct = odd_solve(field_, plane, cfg)
    except SolverFailure as exc:
        return CheckReport(check_id, INCONCLUSIVE, math.nan, tol, {"residual": exc.residual_norm},
                           note="doubled solve did not converge")
    act = ext.raster.node_class != EXTERIOR
    diff = np.where(act, np.abs(ext.u - direct.u), -np.inf)
    idx = np.unravel_index(int(np.argmax(diff)), diff.shape)
    margin = -float(diff[idx])
    status = _status(margin, tol)
    witness = {"node": _node(idx), "extended": float(ext.u[idx]), "direct": float(direct.u[idx])}
    return CheckReport(check_id, status, margin, tol, witness if status == FAIL else None,
                       details={"nodes": int(act.sum())})


# -- quadrature limits ---------------------------------------------------------------------------


def quadrature_limit_suite(ns=(2, 3), a_max: float = 20.0, tol: float = 1e-3) -> list[CheckReport]:
    """Limits and monotonicity of R(a), T(a) and the M_1 height, one report per ``n``.

    For ``n <= 3`` the checks are ``|R(a_max) - pi/(2n-2)| < tol`` and the
    same for ``T``, strict growth of ``R`` and strict decrease of ``T`` on
    ``a in {0.1, 0.2, ..., a_max}`` (measured through the deficit and excess
    to the limit, which stay resolvable in floating point), and growth of
    the M_1 height as ``rho -> 0``.  For larger ``n`` the one-sided bounds
    ``R(a_max) < pi/(2n-2) < T(a_max)`` are checked.
    """
    out = []
    grid = np.round(np.arange(1, int(round(a_max * 10)) + 1) * 0.1, 10)
    for n in ns:
        limit = height_limit(n)
        worst = math.inf
        witness = None

        def record(margin, what):
            nonlocal worst, witness
            if margin < worst:
                worst, witness = margin, {"assertion": what, "margin": margin}

        R = catenoid_height(a_max, n).value
        T = translation_height(a_max, n).value
        if n <= 3:
            record(tol - abs(R - limit), f"|R({a_max:g})-limit|<{tol:g}")
            record(tol - abs(T - limit), f"|T({a_max:g})-limit|<{tol:g}")
            deficit = np.array([catenoid_height_deficit(a, n).value for a in grid])
            excess = np.array([translation_height_excess(a, n).value for a in grid])
            record(float(np.min(-np.diff(deficit))) if np.all(deficit > 0) else -1.0, "R strictly increasing")
            record(float(np.min(-np.diff(excess))) if np.all(excess > 0) else -1.0, "T strictly decreasing")
        else:
            # at a_max the gaps are below double resolution of the heights themselves
            record(catenoid_height_deficit(a_max, n).value, f"R({a_max:g})<limit")
            record(translation_height_excess(a_max, n).value, f"T({a_max:g})>limit")
        rhos = [1.0, 1e-2, 1e-4, 1e-6]
        heights = [m1_height(n, r).value for r in rhos]
        record(float(np.min(np.diff(heights))), "M1 height grows as rho->0")
        status = PASS if worst > 0 else FAIL
        out.append(CheckReport(f"quadrature-n{n}", status, worst, 0.0, witness if status == FAIL else None,
                               details={"R": R, "T": T, "limit": limit}))
    return out


# -- second Scherk type ------------------------------------------------------------------------


def alternating_signs(domain, check_id: str = "scherk2-signs") -> CheckReport:
    """Every pair of faces sharing an (n-2)-cell carries opposite infinite signs."""
    from .pde.scherk import adjacent_sign_pairs

    pairs = adjacent_sign_pairs(domain)
    bad = [p for p in pairs if p[2] * p[3] != -1]
    witness = {"faces": (bad[0][0], bad[0][1]), "signs": (bad[0][2], bad[0][3])} if bad else None
    counts = {"+": sum(p.data.sign > 0 for p in domain.pieces), "-": sum(p.data.sign < 0 for p in domain.pieces)}
    return CheckReport(check_id, FAIL if bad or not pairs else PASS, float(-len(bad)), 0.0, witness,
                       details={"pairs": len(pairs), "faces": len(domain.pieces), **counts})


def mirror_symmetry(field_, reflection, parity: int, config: SolverConfig | None = None,
                    tol: float | None = None, margin_h: float = 4.0, check_id: str = "symmetry") -> CheckReport:
    """``u(I p) = parity * u(p)`` on core interior nodes.

    Nodes whose image falls on a lattice node are compared exactly; other
    images are interpolated and only used when their whole lattice cell lies
    in the core (at least ``margin_h * h`` from the infinite faces).
    """
    from .pde.interp import interpolate

    cfg = config or SolverConfig()
    tol = cfg.slack if tol is None else tol
    r = field_.raster
    core = r.core_mask(margin_h * r.h)
    idx = np.argwhere(core)
    p = r.physical(r.origin + r.h * idx)
    img = reflection.apply(p) * r.scale
    rel = (img - r.origin) / r.h
    base = np.floor(rel + 1e-9).astype(np.int64)
    ok = np.ones(len(idx), dtype=bool)
    dims = np.array(r.dims)
    for corner in np.ndindex(*(2,) * r.n):
        j = base + np.array(corner)
        inside = np.all((j >= 0) & (j < dims), axis=1)
        ok &= inside
        jj = np.clip(j, 0, dims - 1)
        ok &= core[tuple(jj.T)]
    if not ok.any():
        return CheckReport(check_id, INCONCLUSIVE, math.nan, tol, note="no node pairs in the core")
    u = field_.u[tuple(idx[ok].T)]
    v = interpolate(r, field_.u, img[ok])
    defect = np.abs(u - parity * v)
    k = int(np.argmax(defect))
    margin = -float(defect[k])
    status = _status(margin, tol)
    witness = {"node": _node(idx[ok][k]), "value": float(u[k]), "image_value": float(v[k])}
    return CheckReport(check_id, status, margin, tol, witness if status == FAIL else None,
                       details={"pairs": int(ok.sum())})


def self_test(field_, config: SolverConfig | None = None, node=None) -> tuple[CheckReport, tuple]:
    """Harness self-test on the raster of ``field_``.

    The zero field with zero data solves the discrete problem exactly and
    touches its data bounds everywhere.  Raising one interior node by
    ``100 * newton_tol`` must make the max-principle check fail at that node.
    """
    from dataclasses import replace

    r = field_.raster
    values = np.where(r.node_class == DIRICHLET, 0.0, np.nan)
    zero = field_.copy()
    zero.raster = replace(r, values=values)
    zero.u = np.where(r.node_class == EXTERIOR, np.nan, 0.0)
    zero.cap = None
    bad, node = corrupt_field(zero, config, node)
    return max_principle(bad, config, check_id="max-principle-selftest"), node


__all__ = [
    "CheckReport", "alternating_signs", "barrier_sandwich_m1", "comparison", "corrupt_field",
    "format_reports", "height_threshold_probe", "max_principle", "mirror_symmetry", "quadrature_limit_suite",
    "reflection_consistency", "run_checks", "sandwich", "scherk_axis_monotonicity", "self_test",
    "summary_json", "threshold_domain", "NonConvergenceError",
]
