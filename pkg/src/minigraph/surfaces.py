"""Profile integrals of the invariant minimal hypersurfaces of H^n x R.

Families
--------
``M_d``
    Hypersurfaces invariant under hyperbolic translations along a geodesic.
    Over the signed distance ``rho`` to a geodesic hyperplane the height is

        lambda(rho) = int_a^rho d / sqrt(cosh^{2n-2} u - d^2) du,

    with ``a = 0`` for ``d < 1`` and ``cosh^{n-1} a = d`` for ``d > 1``.
``M1``
    The limit ``d = 1``, normalized to vanish at infinity:
    ``h(rho) = int_rho^inf (cosh^{2n-2} u - 1)^{-1/2} du``.
catenoid
    Rotational catenoids with neck radius ``a``; ``R(a)`` is the height gained
    from the neck to infinity.
translation
    Translation heights ``mu_+(a, rho)`` and their limit ``T(a)``.

Every integral has its inverse-square-root endpoint singularity removed
analytically before the tanh-sinh rule is applied.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import DomainError, NoSolutionError, UsageError
from .quadrature import QuadratureResult, ZERO, integrate_many, integrate_tail, tanh_sinh

Family = Literal["Md", "M1", "catenoid", "translation"]

LN2 = math.log(2.0)


def height_limit(n: int) -> float:
    """The common limit pi/(2n-2) of R(a) and T(a) as a -> infinity."""
    return math.pi / (2 * n - 2)


def _check_n(n: int) -> int:
    if int(n) != n or n < 2:
        raise UsageError(f"dimension n must be an integer >= 2, got {n!r}")
    return int(n)


@dataclass(frozen=True)
class ProfileParams:
    """Selects one member of an invariant family.

    For ``M_d`` with ``d > 1`` the start ``a`` is fixed by ``cosh^{n-1}(a) = d``;
    for ``d < 1`` it is 0; for ``d = 1`` any ``a > 0`` is allowed.
    """

    n: int
    family: Family
    d: float = 1.0
    a: float = 0.0

    def __post_init__(self):
        _check_n(self.n)
        if self.family == "Md":
            if not self.d > 0.0:
                raise UsageError(f"M_d needs d > 0, got {self.d!r}")
            if self.d < 1.0 and self.a != 0.0:
                raise UsageError("M_d with d < 1 starts at a = 0")
            if self.d == 1.0 and not self.a > 0.0:
                raise UsageError("M_1 profile needs a > 0")
            if self.d > 1.0:
                expected = math.acosh(self.d ** (1.0 / (self.n - 1)))
                if abs(self.a - expected) > 1e-12 * max(1.0, expected):
                    raise UsageError("M_d with d > 1 needs cosh^{n-1}(a) = d")
        elif self.family not in ("M1", "catenoid", "translation"):
            raise UsageError(f"unknown family {self.family!r}")
        elif self.a < 0.0:
            raise UsageError("parameter a must be nonnegative")

    @classmethod
    def md(cls, n: int, d: float, a: float | None = None) -> "ProfileParams":
        """M_d parameters with ``a`` filled in from ``d`` when it is determined."""
        if d < 1.0:
            a = 0.0
        elif d > 1.0:
            a = math.acosh(d ** (1.0 / (n - 1)))
        elif a is None:
            raise UsageError("M_1 profile needs an explicit a > 0")
        return cls(n=n, family="Md", d=float(d), a=float(a))


# -- stable building blocks ---------------------------------------------------


def _log_cosh(u):
    # log cosh u = log1p(2 sinh^2(u/2)) keeps relative accuracy for small u
    u = np.abs(u)
    small = u < 20.0
    s = np.sinh(np.where(small, u, 0.0) / 2.0)
    big = u + np.log1p(np.exp(-2.0 * u)) - LN2
    return np.where(small, np.log1p(2.0 * s * s), big)


def _cosh_pow_minus_one(u, m: int):
    """cosh^{2m}(u) - 1 without cancellation."""
    return np.expm1(2.0 * m * _log_cosh(u))


def _cosh_pow_gap(a: float, x, m: int):
    """cosh^{2m}(a + x) - cosh^{2m}(a) for x >= 0 without cancellation."""
    c0 = math.cosh(a)
    c1 = np.cosh(a + x)
    dc = 2.0 * np.sinh(a + 0.5 * x) * np.sinh(0.5 * x)
    # C1 - C0 with C = c^m, then C1^2 - C0^2 = (C1 - C0)(C1 + C0)
    acc = np.zeros_like(c1)
    for j in range(m):
        acc = acc + c1**j * c0 ** (m - 1 - j)
    big_c0 = c0**m
    big_c1 = c1**m
    return dc * acc * (big_c1 + big_c0)


def _s_pow_minus_one_w(w, m: int):
    """(1 + w^2)^{2m} - 1 for the substitution s = 1 + w^2."""
    return np.expm1(2.0 * m * np.log1p(w * w))


def _inv_sqrt_s_pow_log(v, m: int):
    """(s^{2m} - 1)^{-1/2} * s evaluated at s = e^v (includes ds = s dv)."""
    return np.exp(-(m - 1) * v) / np.sqrt(-np.expm1(-2.0 * m * v))


# -- M_d and M_1 --------------------------------------------------------------


def _lambda_integrand_regular(d: float, m: int):
    return lambda u: d / np.sqrt(np.expm1(2.0 * m * _log_cosh(u)) + (1.0 - d * d))


def lambda_profile(params: ProfileParams, rho: float) -> QuadratureResult:
    """Height of the M_d profile over signed distance ``rho``."""
    if params.family != "Md":
        raise UsageError("lambda_profile needs an M_d parameter set")
    n, d, a = params.n, params.d, params.a
    m = n - 1
    rho = float(rho)
    if d < 1.0:
        if rho < 0.0:
            return lambda_profile(params, -rho).scaled(-1.0)
        if rho == 0.0:
            return ZERO
        return tanh_sinh(_lambda_integrand_regular(d, m), 0.0, rho)
    if rho < a:
        raise DomainError(f"rho={rho!r} lies below the profile start a={a!r}")
    if rho == a:
        return ZERO
    if d == 1.0:
        return tanh_sinh(lambda u: 1.0 / np.sqrt(_cosh_pow_minus_one(u, m)), a, rho)

    # u = a + s^2 removes the inverse square root at u = a
    def g(s):
        return 2.0 * s * d / np.sqrt(_cosh_pow_gap(a, s * s, m))

    return tanh_sinh(g, 0.0, math.sqrt(rho - a))


def _m1_integrand(m: int):
    return lambda u: 1.0 / np.sqrt(_cosh_pow_minus_one(u, m))


def m1_height(n: int, rho: float) -> QuadratureResult:
    """Height ``h(rho)`` of the M_1 graph, zero at infinity, +inf on the plane."""
    m = _check_n(n) - 1
    rho = float(rho)
    if not rho > 0.0:
        raise DomainError(f"M_1 height needs rho > 0, got {rho!r}")
    return integrate_tail(_m1_integrand(m), rho, first_width=min(max(rho, 1e-3), 1.0))


def lambda_profile_many(params: ProfileParams, rho) -> np.ndarray:
    """Vectorized M_d height for ``d < 1`` (smooth integrand, fixed rule)."""
    if params.family != "Md" or not params.d < 1.0:
        raise UsageError("vectorized profile supports M_d with d < 1 only")
    rho = np.asarray(rho, dtype=float)
    g = _lambda_integrand_regular(params.d, params.n - 1)
    out = integrate_many(g, 0.0, np.abs(rho), level=7)
    return np.sign(rho) * out


def m1_height_many(n: int, rho, anchor: float | None = None) -> np.ndarray:
    """Vectorized ``h(rho)``: one adaptive value at an anchor plus fixed-rule pieces."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0.0):
        raise DomainError("M_1 height needs rho > 0")
    if anchor is None:
        anchor = float(np.max(rho))
    base = m1_height(n, anchor).value
    g = _m1_integrand(n - 1)
    # split [rho, anchor] geometrically so the 1/u growth near 0 stays resolved
    lo = np.minimum(rho, anchor)
    hi = np.maximum(rho, anchor)
    total = np.zeros_like(rho)
    cur = lo.copy()
    while True:
        nxt = np.minimum(2.0 * cur, hi)
        total += integrate_many(g, cur, nxt, level=7)
        cur = nxt
        if np.all(cur >= hi):
            break
    return base + np.where(rho <= anchor, total, -total)


# -- catenoids ----------------------------------------------------------------


def _catenoid_w_integrand(a: float, m: int):
    inv_sinh2 = 1.0 / math.sinh(a) ** 2

    def g(w):
        s = 1.0 + w * w
        return 2.0 * w / np.sqrt(_s_pow_minus_one_w(w, m)) / np.sqrt(s * s + inv_sinh2)

    return g


def _catenoid_v_integrand(a: float, m: int):
    inv_sinh2 = 1.0 / math.sinh(a) ** 2

    def g(v):
        s = np.exp(v)
        return _inv_sqrt_s_pow_log(v, m) / np.sqrt(s * s + inv_sinh2)

    return g


def _split_integral(gw, gv, upper: float) -> QuadratureResult:
    """int_1^upper of a profile integrand written in the w (s = 1 + w^2) and v (s = e^v) variables."""
    if upper <= 2.0:
        return tanh_sinh(gw, 0.0, math.sqrt(upper - 1.0))
    head = tanh_sinh(gw, 0.0, 1.0)
    return head + tanh_sinh(gv, LN2, math.log(upper))


def _split_tail(gw, gv) -> QuadratureResult:
    return tanh_sinh(gw, 0.0, 1.0) + integrate_tail(gv, LN2, first_width=1.0)


def catenoid_height(a: float, n: int) -> QuadratureResult:
    """R(a): height of the catenoid with neck radius ``a`` from the neck to infinity."""
    m = _check_n(n) - 1
    a = float(a)
    if a < 0.0:
        raise DomainError(f"catenoid neck radius must be >= 0, got {a!r}")
    if a == 0.0:
        return ZERO
    return _split_tail(_catenoid_w_integrand(a, m), _catenoid_v_integrand(a, m))


def catenoid_profile(a: float, rho: float, n: int) -> QuadratureResult:
    """Height of the catenoid with neck radius ``a`` at distance ``rho >= a`` from its axis.

    Zero on the neck and increasing to ``R(a)``.
    """
    m = _check_n(n) - 1
    if not a > 0.0:
        raise DomainError("catenoid profile needs a > 0")
    if rho < a:
        raise DomainError("catenoid profile is defined for rho >= a")
    if rho == a:
        return ZERO
    upper = math.sinh(rho) / math.sinh(a)
    return _split_integral(_catenoid_w_integrand(a, m), _catenoid_v_integrand(a, m), upper)


def catenoid_profile_many(a: float, rho, n: int) -> np.ndarray:
    """Vectorized catenoid profile via a dense table and cubic interpolation in log(s - 1)."""
    from scipy.interpolate import CubicSpline

    rho = np.asarray(rho, dtype=float)
    if np.any(rho < a - 1e-12):
        raise DomainError("catenoid profile is defined for rho >= a")
    full = catenoid_height(a, n).value
    rmax = float(np.max(rho))
    # tabulate the remaining height R(a) - profile, which decays smoothly in rho
    grid = np.linspace(a, max(rmax, a + 1e-6), 801)
    vals = np.array([catenoid_profile(a, r, n).value for r in grid])
    spline = CubicSpline(grid, vals)
    out = spline(np.clip(rho, a, None))
    return np.minimum(out, full)


def catenoid_height_deficit(a: float, n: int) -> QuadratureResult:
    """pi/(2n-2) - R(a), computed directly so it keeps relative accuracy for large ``a``.

    Uses ``int_1^inf ds / (s sqrt(s^{2m} - 1)) = pi/(2m)`` and integrates the
    difference of the two integrands in closed form, which has no cancellation.
    """
    m = _check_n(n) - 1
    a = float(a)
    if not a > 0.0:
        raise DomainError(f"catenoid deficit needs a > 0, got {a!r}")
    eps = 1.0 / math.sinh(a) ** 2

    def gap(s):
        r = np.sqrt(s * s + eps)
        return eps / (s * r * (r + s))

    def gw(w):
        return 2.0 * w / np.sqrt(_s_pow_minus_one_w(w, m)) * gap(1.0 + w * w)

    def gv(v):
        return _inv_sqrt_s_pow_log(v, m) * gap(np.exp(v))

    return _split_tail(gw, gv)


def invert_catenoid_height(t: float, n: int, tol: float = 1e-12) -> float:
    """Neck radius ``a`` with ``R(a) = t`` (bisection on the increasing R)."""
    n = _check_n(n)
    if t < 0.0:
        raise DomainError("catenoid height must be nonnegative")
    if t >= height_limit(n):
        raise NoSolutionError(f"no catenoid reaches height {t!r} >= pi/(2n-2)")
    if t == 0.0:
        return 0.0
    lo, hi = 0.0, 1.0
    while catenoid_height(hi, n).value < t:
        lo, hi = hi, 2.0 * hi
        if hi > 700.0:
            raise NoSolutionError(f"height {t!r} is numerically indistinguishable from the limit")
    return _bisect(lambda a: catenoid_height(a, n).value - t, lo, hi, tol)


# -- translation heights ------------------------------------------------------


def _translation_w_integrand(a: float, m: int):
    th2 = math.tanh(a) ** 2

    def g(w):
        w2 = w * w
        # cosh(a) / sqrt(cosh^2(a) s^2 - 1) = 1 / sqrt(s^2 - 1 + tanh^2 a)
        return 2.0 * w / np.sqrt(_s_pow_minus_one_w(w, m)) / np.sqrt(w2 * (2.0 + w2) + th2)

    return g


def _translation_v_integrand(a: float, m: int):
    sech2 = 1.0 / math.cosh(a) ** 2

    def g(v):
        s = np.exp(v)
        return _inv_sqrt_s_pow_log(v, m) / np.sqrt(s * s - sech2)

    return g


def mu_plus(a: float, rho: float, n: int) -> QuadratureResult:
    """Translation height mu_+(a, rho); increases to T(a) as rho grows."""
    m = _check_n(n) - 1
    a, rho = float(a), float(rho)
    if not a > 0.0:
        raise UsageError(f"mu_plus needs a > 0, got {a!r}")
    if rho < a:
        raise DomainError(f"mu_plus needs rho >= a, got rho={rho!r} < a={a!r}")
    if rho == a:
        return ZERO
    upper = math.exp(_log_cosh(rho) - _log_cosh(a))
    return _split_integral(_translation_w_integrand(a, m), _translation_v_integrand(a, m), upper)


def translation_height(a: float, n: int) -> QuadratureResult:
    """T(a): the limit of mu_+(a, rho) as rho -> infinity."""
    m = _check_n(n) - 1
    a = float(a)
    if not a > 0.0:
        raise DomainError(f"translation height needs a > 0, got {a!r}")
    gw = _translation_w_integrand(a, m)
    # the w-integrand has a peak of width ~tanh(a) at w = 0; split there
    edge = min(1.0, 4.0 * math.tanh(a))
    head = tanh_sinh(gw, 0.0, edge) + tanh_sinh(gw, edge, 1.0) if edge < 1.0 else tanh_sinh(gw, 0.0, 1.0)
    return head + integrate_tail(_translation_v_integrand(a, m), LN2, first_width=1.0)


def translation_height_excess(a: float, n: int) -> QuadratureResult:
    """T(a) - pi/(2n-2), computed directly (see :func:`catenoid_height_deficit`)."""
    m = _check_n(n) - 1
    a = float(a)
    if not a > 0.0:
        raise DomainError(f"translation excess needs a > 0, got {a!r}")
    eta = 1.0 / math.cosh(a) ** 2
    th2 = math.tanh(a) ** 2

    def gw(w):
        w2 = w * w
        s = 1.0 + w2
        r = np.sqrt(w2 * (2.0 + w2) + th2)  # sqrt(s^2 - eta)
        return 2.0 * w / np.sqrt(_s_pow_minus_one_w(w, m)) * eta / (s * r * (s + r))

    def gv(v):
        s = np.exp(v)
        r = np.sqrt(s * s - eta)
        return _inv_sqrt_s_pow_log(v, m) * eta / (s * r * (s + r))

    edge = min(1.0, 4.0 * math.tanh(a))
    head = tanh_sinh(gw, 0.0, edge) + tanh_sinh(gw, edge, 1.0) if edge < 1.0 else tanh_sinh(gw, 0.0, 1.0)
    return head + integrate_tail(gv, LN2, first_width=1.0)


def invert_translation_height(t: float, n: int, tol: float = 1e-12) -> float:
    """The ``a`` with ``T(a) = t`` (bisection on the decreasing T)."""
    n = _check_n(n)
    if t <= height_limit(n):
        raise NoSolutionError(f"T(a) > pi/(2n-2) for every a; no solution for t={t!r}")
    lo, hi = 1.0, 1.0
    while translation_height(lo, n).value < t:
        lo *= 0.5
        if lo < 1e-300:
            raise NoSolutionError("height too large to invert")
    while translation_height(hi, n).value > t:
        hi *= 2.0
        if hi > 700.0:
            raise NoSolutionError(f"height {t!r} is numerically indistinguishable from the limit")
    return _bisect(lambda a: t - translation_height(a, n).value, lo, hi, tol)


def _bisect(fn, lo: float, hi: float, tol: float) -> float:
    """Root of an increasing function on [lo, hi]."""
    flo = fn(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = fn(mid)
        if fm == 0.0:
            return mid
        if (fm < 0.0) == (flo < 0.0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo <= tol * max(1.0, abs(mid)):
            break
    return 0.5 * (lo + hi)


def evaluate(params: ProfileParams, x: float) -> QuadratureResult:
    """Dispatch by family: ``x`` is rho for M_d / M1 and a for catenoid / translation."""
    if params.family == "Md":
        return lambda_profile(params, x)
    if params.family == "M1":
        return m1_height(params.n, x)
    if params.family == "catenoid":
        return catenoid_height(x, params.n)
    return translation_height(x, params.n)
