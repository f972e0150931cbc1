"""Adaptive tanh-sinh (double-exponential) quadrature.

The integrands handled here are smooth on their (finite) interval after the
endpoint singularities have been removed by a change of variable, so the
plain double-exponential rule converges very fast.  Intervals where the
level-to-level estimate does not settle are bisected.  Semi-infinite ranges
are covered by panels of doubling width that stop once the integrand drops
below a cutoff; a geometric-series bound on the neglected remainder is added
to the error estimate.

Nodes close to an endpoint are formed as endpoint + offset, so a singular
endpoint keeps full resolution only when it sits at 0; callers shift their
variable accordingly.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

logger = logging.getLogger(__name__)

Integrand = Callable[[np.ndarray], np.ndarray]

_T_MAX = 4.0
_HALF_PI = 0.5 * math.pi


@dataclass(frozen=True)
class QuadratureResult:
    """Value of an integral with an error estimate and evaluation count."""

    value: float
    error_estimate: float
    evaluations: int

    def __add__(self, other: "QuadratureResult") -> "QuadratureResult":
        return QuadratureResult(
            self.value + other.value,
            self.error_estimate + other.error_estimate,
            self.evaluations + other.evaluations,
        )

    def scaled(self, factor: float) -> "QuadratureResult":
        return QuadratureResult(factor * self.value, abs(factor) * self.error_estimate, self.evaluations)

    def __float__(self) -> float:
        return float(self.value)


ZERO = QuadratureResult(0.0, 0.0, 0)


def _abscissae(ts: np.ndarray, a: float, b: float):
    """Nodes and weights on [a, b] for the parameters ``ts`` (no step factor).

    Nodes near an endpoint are written as endpoint + offset so that the
    offset keeps full relative precision.
    """
    half = 0.5 * (b - a)
    u = _HALF_PI * np.sinh(ts)
    au = np.abs(u)
    # 1 - tanh|u| = exp(-|u|) / cosh|u|
    offset = half * np.exp(-au) / np.cosh(au)
    x = np.where(ts < 0.0, a + offset, b - offset)
    x = np.where(ts == 0.0, a + half, x)
    w = half * _HALF_PI * np.cosh(ts) / np.cosh(au) ** 2
    return x, w


def _weighted_sum(f: Integrand, x: np.ndarray, w: np.ndarray, width: float) -> float:
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        fx = np.asarray(f(x), dtype=float)
    bad = ~np.isfinite(fx)
    if bad.any():
        # nodes that round onto an endpoint are dropped; their weight is negligible
        if np.any(w[bad] > 1e-30 * width):
            raise FloatingPointError("integrand is not finite inside the interval")
        fx = np.where(bad, 0.0, fx)
    return float(math.fsum(w * fx))


def _tanh_sinh_once(f: Integrand, a: float, b: float, rtol: float, atol: float, max_level: int):
    h = 1.0
    ts = np.arange(-_T_MAX, _T_MAX + 0.5 * h, h)
    x, w = _abscissae(ts, a, b)
    total = _weighted_sum(f, x, w, b - a)
    evals = ts.size
    estimate = h * total
    err = math.inf
    for _level in range(1, max_level + 1):
        h *= 0.5
        # only the odd multiples of the new step are new nodes
        k = np.arange(1, int(round(2 * _T_MAX / h)) + 1, 2)
        ts = -_T_MAX + k * h
        x, w = _abscissae(ts, a, b)
        total += _weighted_sum(f, x, w, b - a)
        evals += ts.size
        new = h * total
        err = abs(new - estimate)
        estimate = new
        if err <= max(rtol * abs(estimate), atol):
            break
    return estimate, err, evals


def tanh_sinh(f: Integrand, a: float, b: float, rtol: float = 1e-13, atol: float = 1e-300,
              max_level: int = 8, max_depth: int = 40) -> QuadratureResult:
    """Integrate a vectorized ``f`` over the finite interval [a, b].

    Parameters
    ----------
    f : callable
        Vectorized integrand, evaluated on arrays of nodes strictly inside (a, b).
    a, b : float
        Interval ends; ``b < a`` flips the sign.
    rtol, atol : float
        Acceptance threshold on the level-to-level difference.
    max_level : int
        Number of step halvings before an interval is bisected.
    """
    if a == b:
        return ZERO
    if b < a:
        return tanh_sinh(f, b, a, rtol, atol, max_level, max_depth).scaled(-1.0)
    est, err, evals = _tanh_sinh_once(f, a, b, rtol, atol, max_level)
    if err <= max(rtol * abs(est), atol):
        return QuadratureResult(est, err, evals)
    scale = abs(est)
    stack = [(a, 0.5 * (a + b), 1), (0.5 * (a + b), b, 1)]
    err_total = 0.0
    pieces = []
    while stack:
        lo, hi, depth = stack.pop()
        local_atol = max(atol, rtol * scale * (hi - lo) / (b - a))
        est, err, ev = _tanh_sinh_once(f, lo, hi, rtol, local_atol, max_level)
        evals += ev
        if err <= max(rtol * abs(est), local_atol) or depth >= max_depth:
            if depth >= max_depth:
                logger.warning("tanh-sinh bisection limit reached on [%g, %g]", lo, hi)
            pieces.append(est)
            err_total += err
            continue
        mid = 0.5 * (lo + hi)
        stack.append((mid, hi, depth + 1))
        stack.append((lo, mid, depth + 1))
    value = math.fsum(pieces)
    return QuadratureResult(value, err_total, evals)


def integrate_tail(f: Integrand, a: float, first_width: float, cutoff: float = 1e-16,
                   rtol: float = 1e-13, max_panels: int = 200) -> QuadratureResult:
    """Integrate ``f`` over [a, inf) with panels of doubling width.

    Panels are added until the integrand at a panel end falls below
    ``cutoff``.  The neglected remainder is bounded by the geometric series
    built from the ratio of the last two panel contributions.
    """
    lo = a
    width = first_width
    total = ZERO
    prev = None
    last = None
    for _ in range(max_panels):
        hi = lo + width
        panel = tanh_sinh(f, lo, hi, rtol=rtol)
        total = total + panel
        prev, last = last, panel.value
        end_value = float(np.abs(f(np.array([hi])))[0])
        if end_value < cutoff and prev is not None:
            ratio = abs(last) / abs(prev) if prev != 0.0 else 0.0
            if ratio < 1.0:
                remainder = abs(last) * ratio / (1.0 - ratio)
            else:
                remainder = abs(last)
            return QuadratureResult(total.value, total.error_estimate + remainder, total.evaluations + 1)
        lo = hi
        width *= 2.0
    raise FloatingPointError("tail integrand did not decay below the cutoff")


def fixed_rule(level: int = 6) -> tuple[np.ndarray, np.ndarray]:
    """A fixed tanh-sinh rule on [0, 1] as (fractions, weights).

    Used to integrate many smooth integrands with different limits in one
    vectorized sweep: ``int_a^b g = (b - a) * sum(w * g(a + (b - a) * frac))``.
    """
    h = 2.0 ** (-level)
    ts = np.arange(-_T_MAX, _T_MAX + 0.5 * h, h)
    x, w = _abscissae(ts, 0.0, 1.0)
    return x, w * h


def integrate_many(g: Callable[[np.ndarray], np.ndarray], a, b, level: int = 6,
                   chunk: int = 4096) -> np.ndarray:
    """Vectorized ``int_a^b g`` for broadcastable arrays of limits.

    ``g`` receives an array with one extra trailing axis holding the nodes.
    Intended for smooth integrands only (no adaptivity).  Limits are processed
    ``chunk`` at a time to bound memory.
    """
    frac, w = fixed_rule(level)
    a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    fa, fb = a.ravel(), b.ravel()
    out = np.empty(fa.size)
    for start in range(0, fa.size, chunk):
        sa = fa[start:start + chunk, None]
        sb = fb[start:start + chunk, None]
        x = sa + (sb - sa) * frac
        out[start:start + chunk] = (sb - sa)[:, 0] * np.sum(w * g(x), axis=-1)
    return out.reshape(a.shape)
