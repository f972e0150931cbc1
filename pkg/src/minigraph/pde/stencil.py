"""Finite-difference residuals of the minimal graph equation and their Jacobian.

The pointwise residuals and :class:`GridOperator` use the non-divergence form.  With ``g = grad u`` and
``x = x_n`` (hyperbolic case) the operator reads

    sum_i a_ii u_ii + sum_{i<k} c_ik u_ik + L(g, x)

    a_ii = 1 + x^2 sum_{j != i} g_j^2
    c_ik = -2 x^2 g_i g_k
    L    = (2 - n)(1 + x^2 |g|^2) g_n / x - x g_n |g|^2

and the Euclidean operator is obtained with ``x = 1`` and ``L = 0``.
Second derivatives use the 3-point and 4-point centered differences, first
derivatives the 2-point centered difference.
"""

from __future__ import annotations

import itertools

import numpy as np
import scipy.sparse as sp

from ..errors import ClassificationError, UsageError
from ..raster import EXTERIOR, INTERIOR, RasterizedDomain


def _pairs(n: int):
    return list(itertools.combinations(range(n), 2))


def operator_terms(g, uii, uik, x, n: int, space: str):
    """Residual ``F`` and weight ``W^2`` from pointwise derivatives.

    ``g`` and ``uii`` have shape ``(..., n)``; ``uik`` maps ``(i, k)`` to arrays.
    """
    g = np.asarray(g, dtype=float)
    gg = g * g
    g2 = gg.sum(axis=-1)
    if space == "hyperbolic":
        x = np.asarray(x, dtype=float)
        x2 = x * x
    else:
        x2 = 1.0
    F = np.zeros(g2.shape)
    for i in range(n):
        F = F + (1.0 + x2 * (g2 - gg[..., i])) * uii[..., i]
    for (i, k) in _pairs(n):
        F = F - 2.0 * x2 * g[..., i] * g[..., k] * uik[(i, k)]
    W2 = 1.0 + x2 * g2
    if space == "hyperbolic":
        gn = g[..., n - 1]
        F = F + (2 - n) * W2 * gn / x - x * gn * g2
    return F, W2


def _stencil_derivatives(s: np.ndarray, h: float):
    s = np.asarray(s, dtype=float)
    n = s.ndim
    if s.shape != (3,) * n:
        raise UsageError("stencil values must be a 3 x ... x 3 array")
    if not np.all(np.isfinite(s)):
        raise ClassificationError("stencil reaches an exterior node")
    c = (1,) * n

    def at(off):
        return s[tuple(ci + o for ci, o in zip(c, off))]

    def e(*pairs):
        v = [0] * n
        for i, sgn in pairs:
            v[i] = sgn
        return v

    g = np.array([(at(e((i, 1))) - at(e((i, -1)))) / (2 * h) for i in range(n)])
    uii = np.array([(at(e((i, 1))) - 2 * s[c] + at(e((i, -1)))) / h**2 for i in range(n)])
    uik = {(i, k): (at(e((i, 1), (k, 1))) - at(e((i, 1), (k, -1))) - at(e((i, -1), (k, 1)))
                    + at(e((i, -1), (k, -1)))) / (4 * h * h) for (i, k) in _pairs(n)}
    return g, uii, uik


def residual_hyperbolic(u, x_n: float, h: float, n: int | None = None) -> float:
    """Pointwise hyperbolic residual at the center of a ``3^n`` stencil of values.

    Parameters
    ----------
    u : array of shape (3, 3) or (3, 3, 3)
        Values at the center node and its neighbours, indexed by offset + 1.
    x_n : float
        Height coordinate of the center node.
    h : float
        Grid spacing.
    """
    u = np.asarray(u, dtype=float)
    if n is not None and u.ndim != n:
        raise UsageError("stencil dimension does not match n")
    if not x_n > 0:
        raise UsageError("x_n must be positive")
    g, uii, uik = _stencil_derivatives(u, h)
    F, _ = operator_terms(g, uii, uik, x_n, u.ndim, "hyperbolic")
    return float(F)


def residual_euclidean(u, h: float, n: int | None = None) -> float:
    """Pointwise Euclidean minimal surface residual at the center of a stencil."""
    u = np.asarray(u, dtype=float)
    if n is not None and u.ndim != n:
        raise UsageError("stencil dimension does not match n")
    g, uii, uik = _stencil_derivatives(u, h)
    F, _ = operator_terms(g, uii, uik, None, u.ndim, "euclidean")
    return float(F)


class GridOperator:
    """Vectorized residual and Jacobian over the interior nodes of a raster."""

    def __init__(self, raster: RasterizedDomain):
        if raster.n not in (2, 3):
            raise UsageError("the solver supports n in {2, 3}")
        self.raster = raster
        self.n = n = raster.n
        self.h = raster.h
        self.space = raster.space
        cls = raster.node_class.ravel()
        self.interior = np.flatnonzero(cls == INTERIOR)
        self.m = len(self.interior)
        strides = np.array([int(np.prod(raster.dims[i + 1:])) for i in range(n)])
        self._off = {}
        for off in itertools.product((-1, 0, 1), repeat=n):
            if sum(abs(o) for o in off) <= 2:
                self._off[off] = self.interior + int(np.dot(off, strides))
        for off in self._off:
            if np.any(cls[self._off[off]] == EXTERIOR) and sum(abs(o) for o in off) > 0:
                raise ClassificationError("stencil of an interior node reaches an exterior node")
        self.pos = np.full(cls.size, -1, dtype=np.int64)
        self.pos[self.interior] = np.arange(self.m)
        idx = np.array(np.unravel_index(self.interior, raster.dims))
        self.x = raster.origin[n - 1] + raster.h * idx[n - 1]
        if self.space == "hyperbolic" and self.m and self.x.min() <= 0:
            raise UsageError("interior nodes must have x_n > 0")

    def _unit(self, *pairs):
        v = [0] * self.n
        for i, s in pairs:
            v[i] = s
        return tuple(v)

    def derivatives(self, u_flat: np.ndarray):
        h = self.h
        U = lambda off: u_flat[self._off[off]]  # noqa: E731
        c = U((0,) * self.n)
        g = np.empty((self.m, self.n))
        uii = np.empty((self.m, self.n))
        for i in range(self.n):
            up, dn = U(self._unit((i, 1))), U(self._unit((i, -1)))
            g[:, i] = (up - dn) / (2 * h)
            uii[:, i] = (up - 2 * c + dn) / (h * h)
        uik = {}
        for (i, k) in _pairs(self.n):
            uik[(i, k)] = (U(self._unit((i, 1), (k, 1))) - U(self._unit((i, 1), (k, -1)))
                           - U(self._unit((i, -1), (k, 1))) + U(self._unit((i, -1), (k, -1)))) / (4 * h * h)
        return g, uii, uik

    def residual(self, u_flat: np.ndarray):
        """Raw residual ``F`` and weight ``W^2`` at interior nodes."""
        g, uii, uik = self.derivatives(u_flat)
        return operator_terms(g, uii, uik, self.x, self.n, self.space)

    def newton_residual(self, u_flat: np.ndarray) -> np.ndarray:
        """The residual whose Jacobian :meth:`jacobian` returns."""
        return self.residual(u_flat)[0]

    def merit(self, u_flat: np.ndarray) -> float:
        """Max-norm of the residual normalized by ``W^2``."""
        F, W2 = self.residual(u_flat)
        return float(np.max(np.abs(F / W2))) if self.m else 0.0

    def _assemble(self, center, axis_coef, cross_coef):
        """Sparse matrix over unknowns from per-offset coefficients; also the
        contribution of fixed (non-interior) neighbours per unit value."""
        rows, cols, vals = [np.arange(self.m)], [np.arange(self.m)], [center]
        fixed = []
        for off, coef in list(axis_coef.items()) + list(cross_coef.items()):
            nb = self._off[off]
            p = self.pos[nb]
            inside = p >= 0
            rows.append(np.flatnonzero(inside))
            cols.append(p[inside])
            vals.append(coef[inside])
            fixed.append((nb[~inside], np.flatnonzero(~inside), coef[~inside]))
        A = sp.csc_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(self.m, self.m))
        return A, fixed

    def jacobian(self, u_flat: np.ndarray):
        """Analytic Jacobian of the interior residual with respect to interior values."""
        n, h = self.n, self.h
        g, uii, uik = self.derivatives(u_flat)
        gg = g * g
        g2 = gg.sum(axis=1)
        hyp = self.space == "hyperbolic"
        x = self.x if hyp else np.ones(self.m)
        x2 = x * x
        a = np.stack([1.0 + x2 * (g2 - gg[:, i]) for i in range(n)], axis=1)
        dF = np.empty((self.m, n))
        for m_ in range(n):
            s = 2.0 * x2 * g[:, m_] * (uii.sum(axis=1) - uii[:, m_])
            for k in range(n):
                if k == m_:
                    continue
                key = (min(m_, k), max(m_, k))
                s = s - 2.0 * x2 * g[:, k] * uik[key]
            if hyp:
                gn = g[:, n - 1]
                dm = 1.0 if m_ == n - 1 else 0.0
                s = s + (2 - n) * ((1.0 + x2 * g2) * dm + 2.0 * x2 * g[:, m_] * gn) / x
                s = s - x * (dm * g2 + 2.0 * gn * g[:, m_])
            dF[:, m_] = s
        center = -2.0 * a.sum(axis=1) / (h * h)
        axis_coef = {}
        for i in range(n):
            axis_coef[self._unit((i, 1))] = a[:, i] / (h * h) + dF[:, i] / (2 * h)
            axis_coef[self._unit((i, -1))] = a[:, i] / (h * h) - dF[:, i] / (2 * h)
        cross_coef = {}
        for (i, k) in _pairs(n):
            c = -2.0 * x2 * g[:, i] * g[:, k] / (4 * h * h)
            for si, sk in itertools.product((-1, 1), repeat=2):
                cross_coef[self._unit((i, si), (k, sk))] = si * sk * c
        A, _ = self._assemble(center, axis_coef, cross_coef)
        return A

    def linear_system(self, u_flat: np.ndarray | None, boundary_flat: np.ndarray):
        """Frozen-coefficient (Picard) system ``A u = b``; ``u_flat=None`` gives the Laplace stencil."""
        n, h = self.n, self.h
        if u_flat is None:
            a = np.ones((self.m, n))
            cross = {key: np.zeros(self.m) for key in _pairs(n)}
            beta = np.zeros(self.m)
        else:
            g, _, _ = self.derivatives(u_flat)
            gg = g * g
            g2 = gg.sum(axis=1)
            hyp = self.space == "hyperbolic"
            x2 = self.x**2 if hyp else np.ones(self.m)
            a = np.stack([1.0 + x2 * (g2 - gg[:, i]) for i in range(n)], axis=1)
            cross = {(i, k): -2.0 * x2 * g[:, i] * g[:, k] for (i, k) in _pairs(n)}
            if hyp:
                beta = (2 - n) * (1.0 + x2 * g2) / self.x - self.x * g2
            else:
                beta = np.zeros(self.m)
        center = -2.0 * a.sum(axis=1) / (h * h)
        axis_coef = {}
        for i in range(n):
            b = beta if i == n - 1 else 0.0
            axis_coef[self._unit((i, 1))] = a[:, i] / (h * h) + b / (2 * h)
            axis_coef[self._unit((i, -1))] = a[:, i] / (h * h) - b / (2 * h)
        cross_coef = {}
        for (i, k) in _pairs(n):
            for si, sk in itertools.product((-1, 1), repeat=2):
                cross_coef[self._unit((i, si), (k, sk))] = si * sk * cross[(i, k)] / (4 * h * h)
        A, fixed = self._assemble(center, axis_coef, cross_coef)
        rhs = np.zeros(self.m)
        for nb, rows, coef in fixed:
            np.add.at(rhs, rows, -coef * boundary_flat[nb])
        return A, rhs

    def max_gradient(self, u_flat: np.ndarray) -> float:
        """Largest one-sided difference quotient along grid edges touching interior nodes."""
        if not self.m:
            return 0.0
        best = 0.0
        c = u_flat[self.interior]
        for i in range(self.n):
            for s in (-1, 1):
                d = np.abs(u_flat[self._off[self._unit((i, s))]] - c) / self.h
                best = max(best, float(np.max(d)))
        return best


class FluxOperator(GridOperator):
    """Conservative discretization used by the solver.

    The minimal graph equation is equivalent to ``sum_i d_i(w u_i / W) = 0``
    with ``w = x_n^(2-n)`` (``w = 1`` in the Euclidean case).  Fluxes live on
    the half-way faces between a node and its axis neighbours.  On a face the
    tangential gradient is the average of the centered differences at its two
    nodes, so the stencil stays the compact 9-point / 19-point one.

    Collar nodes (capped infinite data) get two special rules:

    * tangential differences never use a collar value; they fall back to the
      one-sided difference on the other side;
    * on a face between an interior node and a collar node the gradient is
      taken parallel to the normal ``nu`` of the owning face (the data is
      constant along it), so ``|grad u| = |p| / |nu_i|``.  The flux then
      saturates at ``w |nu_i| / x_n`` and the total flux a capped face can
      carry is its true length, independently of how it cuts the lattice.

    The residual returned by :meth:`residual` is rescaled by ``W_c x_n^(n-2)``
    (``W_c`` from centered differences) so that it matches the non-divergence
    residual divided by ``W^2`` to leading order.
    """

    def __init__(self, raster: RasterizedDomain):
        super().__init__(raster)
        from ..raster import COLLAR

        cls = raster.node_class.ravel()
        usable = (cls != COLLAR) & (cls != EXTERIOR)
        normals = _collar_normals(raster)
        h = self.h
        zero = (0,) * self.n
        self._faces = []
        for i in range(self.n):
            for s in (-1, 1):
                if self.space == "hyperbolic":
                    xf = self.x + (0.5 * s * h if i == self.n - 1 else 0.0)
                    w = xf ** (2 - self.n)
                    xf2 = xf * xf
                else:
                    w = np.ones(self.m)
                    xf2 = np.ones(self.m)
                o_off = self._unit((i, s))
                o_idx = self._off[o_off]
                collar = cls[o_idx] == COLLAR
                nu_i = np.ones(self.m)
                if collar.any():
                    nu_i[collar] = normals[o_idx[collar], i]
                kappa = np.where(collar, 1.0 / np.maximum(nu_i * nu_i, 1e-12), 1.0)
                tang = {}
                for k in range(self.n):
                    if k == i:
                        continue
                    terms = {}
                    for base in (zero, o_off):
                        plus = tuple(b + e for b, e in zip(base, self._unit((k, 1))))
                        minus = tuple(b + e for b, e in zip(base, self._unit((k, -1))))
                        ap = usable[self._off[plus]]
                        am = usable[self._off[minus]]
                        both = ap & am
                        wp = np.where(both, 0.5 / h, np.where(ap, 1.0 / h, 0.0))
                        wm = np.where(both, -0.5 / h, np.where(am, -1.0 / h, 0.0))
                        wz = np.where(both, 0.0, np.where(ap, -1.0 / h, np.where(am, 1.0 / h, 0.0)))
                        for off, wt in ((plus, wp), (minus, wm), (base, wz)):
                            terms[off] = terms.get(off, 0.0) + 0.5 * wt * ~collar
                    tang[k] = terms
                self._faces.append((i, s, w, xf2, o_off, collar, kappa, tang))

    def _face(self, u_flat, face):
        i, s, w, xf2, o_off, collar, kappa, tang = face
        c = u_flat[self.interior]
        p = s * (u_flat[self._off[o_off]] - c) / self.h
        q2 = np.zeros(self.m)
        qs = {}
        for k, terms in tang.items():
            qk = np.zeros(self.m)
            for off, wt in terms.items():
                qk = qk + wt * u_flat[self._off[off]]
            qs[k] = qk
            q2 = q2 + qk * qk
        return p, qs, q2

    @staticmethod
    def _weight(p, q2, xf2, kappa):
        return np.sqrt(1.0 + xf2 * (kappa * p * p + q2))

    def divergence(self, u_flat: np.ndarray) -> np.ndarray:
        out = np.zeros(self.m)
        for face in self._faces:
            i, s, w, xf2, o_off, collar, kappa, tang = face
            p, _, q2 = self._face(u_flat, face)
            out += s * w * p / self._weight(p, q2, xf2, kappa)
        return out / self.h

    def _scale(self, u_flat):
        g, _, _ = self.derivatives(u_flat)
        x2 = self.x**2 if self.space == "hyperbolic" else 1.0
        with np.errstate(invalid="ignore"):
            Wc = np.sqrt(1.0 + x2 * (g * g).sum(axis=1))
        if self.space == "hyperbolic":
            return Wc * self.x ** (self.n - 2)
        return Wc

    def residual(self, u_flat: np.ndarray):
        D = self.divergence(u_flat)
        return D * self._scale(u_flat), np.ones(self.m)

    def newton_residual(self, u_flat: np.ndarray) -> np.ndarray:
        return self.divergence(u_flat)

    def jacobian(self, u_flat: np.ndarray):
        """Analytic Jacobian of :meth:`divergence` with respect to interior values."""
        h = self.h
        coef = {off: np.zeros(self.m) for off in self._off}
        zero = (0,) * self.n
        for face in self._faces:
            i, s, w, xf2, o_off, collar, kappa, tang = face
            p, qs, q2 = self._face(u_flat, face)
            W = self._weight(p, q2, xf2, kappa)
            W3 = W**3
            dp = w * (1.0 + xf2 * q2) / W3
            # d(s * Phi / h) / d u_o = dp / h^2, and the opposite for u_c
            coef[o_off] += dp / (h * h)
            coef[zero] -= dp / (h * h)
            for k, terms in tang.items():
                dq = -w * xf2 * p * qs[k] / W3 * s / h
                for off, wt in terms.items():
                    coef[off] += dq * wt
        center = coef.pop(zero)
        A, _ = self._assemble(center, coef, {})
        return A

    def linear_system(self, u_flat: np.ndarray | None, boundary_flat: np.ndarray):
        """Frozen-``W`` system; ``u_flat=None`` gives the plain Laplace stencil."""
        h = self.h
        axis_coef = {}
        center = np.zeros(self.m)
        for face in self._faces:
            i, s, w, xf2, o_off, collar, kappa, tang = face
            if u_flat is None:
                k = np.ones(self.m)
            else:
                p, _, q2 = self._face(u_flat, face)
                k = w / self._weight(p, q2, xf2, kappa)
            axis_coef[o_off] = k / (h * h)
            center -= k / (h * h)
        A, fixed = self._assemble(center, axis_coef, {})
        rhs = np.zeros(self.m)
        for nb, rows, c in fixed:
            np.add.at(rhs, rows, -c * boundary_flat[nb])
        return A, rhs


def _collar_normals(raster: RasterizedDomain) -> np.ndarray:
    """Unit normals of the owning infinite face at each collar node (rows of zeros elsewhere).

    Nodes without snapping information fall back to the unit vector along
    the face direction, i.e. the ordinary flux.
    """
    from ..raster import COLLAR

    total = int(np.prod(raster.dims))
    out = np.zeros((total, raster.n))
    cls = raster.node_class.ravel()
    ids = np.flatnonzero(cls == COLLAR)
    if not len(ids):
        return out
    out[ids] = 1.0
    domain = raster.domain
    if domain is None or not raster.snapped:
        return out
    owner = raster.owner.ravel()
    for pid in np.unique(owner[ids]):
        sel = ids[owner[ids] == pid]
        have = np.array([int(j) in raster.snapped for j in sel])
        sel = sel[have]
        if not len(sel):
            continue
        pts = np.array([raster.snapped[int(j)] for j in sel]) / raster.scale
        best = None
        best_lev = None
        for con, p in domain.boundary_constraints(int(pid)):
            lev = np.abs(con.level(pts))
            nrm = con.normal(pts)
            if best is None:
                best, best_lev = nrm, lev
            else:
                take = lev < best_lev
                best = np.where(take[:, None], nrm, best)
                best_lev = np.minimum(best_lev, lev)
        if best is not None:
            nrm = best / np.linalg.norm(best, axis=1, keepdims=True)
            out[sel] = nrm
    return out
