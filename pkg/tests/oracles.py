"""Independent brute-force oracles for the profile integrals.

A composite midpoint rule with a million panels, written directly from the
defining integrals.  The only shared ingredients with the library are the
endpoint substitutions (needed for any midpoint rule to converge) and, for
infinite ranges, the compactification ``w = tau / (1 - tau)``.
"""

from __future__ import annotations

import math

import numpy as np

PANELS = 10**6


def midpoint(g, lo: float, hi: float, panels: int = PANELS, chunk: int = 200_000) -> float:
    h = (hi - lo) / panels
    total = 0.0
    for start in range(0, panels, chunk):
        k = np.arange(start, min(start + chunk, panels), dtype=float)
        total += float(np.sum(g(lo + (k + 0.5) * h)))
    return total * h


def compact(g):
    """Map an integrand on [0, inf) to one on [0, 1)."""

    def wrapped(tau):
        w = tau / (1.0 - tau)
        return g(w) / (1.0 - tau) ** 2

    return wrapped


def lam(d: float, n: int, rho: float) -> float:
    m = n - 1
    if d < 1.0:
        sign = 1.0 if rho >= 0 else -1.0
        return sign * midpoint(lambda u: d / np.sqrt(np.cosh(u) ** (2 * m) - d * d), 0.0, abs(rho))
    a = math.acosh(d ** (1.0 / m))
    # u = a + s^2
    return midpoint(lambda s: 2 * s * d / np.sqrt(np.cosh(a + s * s) ** (2 * m) - d * d), 0.0, math.sqrt(rho - a))


def m1(n: int, rho: float) -> float:
    m = n - 1

    def g(x):
        with np.errstate(over="ignore"):
            return 1.0 / np.sqrt(np.cosh(rho + x) ** (2 * m) - 1.0)

    return midpoint(compact(g), 0.0, 1.0)


def _s_factor(w, m):
    # 2w / sqrt(s^{2m} - 1) with s = 1 + w^2
    s = 1.0 + w * w
    with np.errstate(over="ignore"):
        return 2.0 * w / np.sqrt(s ** (2 * m) - 1.0)


def catenoid_R(a: float, n: int) -> float:
    m = n - 1
    sa = math.sinh(a)

    def g(w):
        s = 1.0 + w * w
        return sa * _s_factor(w, m) / np.sqrt(sa * sa * s * s + 1.0)

    return midpoint(compact(g), 0.0, 1.0)


def translation_T(a: float, n: int) -> float:
    m = n - 1
    ca = math.cosh(a)

    def g(w):
        s = 1.0 + w * w
        return ca * _s_factor(w, m) / np.sqrt(ca * ca * s * s - 1.0)

    return midpoint(compact(g), 0.0, 1.0)


def mu_plus(a: float, rho: float, n: int) -> float:
    m = n - 1
    ca = math.cosh(a)
    top = math.sqrt(math.cosh(rho) / ca - 1.0)

    def g(w):
        s = 1.0 + w * w
        return ca * _s_factor(w, m) / np.sqrt(ca * ca * s * s - 1.0)

    return midpoint(g, 0.0, top)


def geodesic_length_numeric(p, q, steps: int = 200_000) -> float:
    """Length of the half-plane geodesic from p to q by integrating the metric."""
    p = np.asarray(p, float)
    q = np.asarray(q, float)
    if abs(p[0] - q[0]) < 1e-15:
        y = np.linspace(p[1], q[1], steps + 1)
        mid = 0.5 * (y[1:] + y[:-1])
        return float(np.sum(np.abs(np.diff(y)) / mid))
    c = (q @ q - p @ p) / (2 * (q[0] - p[0]))
    r = math.hypot(p[0] - c, p[1])
    t0 = math.atan2(p[1], p[0] - c)
    t1 = math.atan2(q[1], q[0] - c)
    t = np.linspace(t0, t1, steps + 1)
    tm = 0.5 * (t[1:] + t[:-1])
    # ds_E = r dt, metric divides by y = r sin t
    return float(np.sum(np.abs(np.diff(t)) / np.sin(tm)))
