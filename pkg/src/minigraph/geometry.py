"""Hyperbolic n-space in the upper half-space and Poincare ball models.

The half-space model ``{x in R^n : x_n > 0}`` with metric ``|dx|^2 / x_n^2``
is the computational model.  Geodesic hyperplanes are either vertical
affine hyperplanes or Euclidean hemispheres centred on ``{x_n = 0}``.

Every geodesic hyperplane carries an intrinsic "sinh-distance" function
``f`` whose zero set is the plane and which satisfies ``|f(p)| = sinh d(p, plane)``.
Signs are fixed by a side marker rather than by an orientation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import UsageError

Model = Literal["halfspace", "ball"]


@dataclass(frozen=True, eq=False)
class HPoint:
    """A point of hyperbolic n-space in one of the two models."""

    coords: np.ndarray
    model: Model = "halfspace"
    dim: int = field(init=False)

    def __post_init__(self):
        c = np.array(self.coords, dtype=float).reshape(-1)
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)
        object.__setattr__(self, "dim", c.size)
        if c.size < 2:
            raise UsageError("hyperbolic points need dimension n >= 2")
        if self.model == "halfspace":
            if not c[-1] > 0.0:
                raise UsageError(f"half-space point needs x_n > 0, got {c[-1]!r}")
        elif self.model == "ball":
            if not float(np.dot(c, c)) < 1.0:
                raise UsageError("ball-model point must have Euclidean norm < 1")
        else:
            raise UsageError(f"unknown model {self.model!r}")

    def __eq__(self, other):
        if not isinstance(other, HPoint):
            return NotImplemented
        return self.model == other.model and np.array_equal(self.coords, other.coords)

    def __hash__(self):
        return hash((self.model, self.coords.tobytes()))

    def __repr__(self):
        return f"HPoint({self.coords.tolist()!r}, model={self.model!r})"


def _as_coords(p) -> np.ndarray:
    if isinstance(p, HPoint):
        return np.asarray(p.coords)
    return np.asarray(p, dtype=float)


def _check_pair(p: HPoint, q: HPoint):
    if p.model != q.model:
        raise UsageError(f"model mismatch: {p.model} vs {q.model}")
    if p.dim != q.dim:
        raise UsageError(f"dimension mismatch: {p.dim} vs {q.dim}")


def hyp_dist(p: HPoint, q: HPoint) -> float:
    """Hyperbolic distance between two points of the same model."""
    _check_pair(p, q)
    x, y = p.coords, q.coords
    diff = x - y
    sq = float(np.dot(diff, diff))
    if sq == 0.0:
        return 0.0
    if p.model == "halfspace":
        # arccosh(1 + z) with z small is ill-conditioned; use the asinh form
        s = math.sqrt(sq / (4.0 * x[-1] * y[-1]))
        return 2.0 * math.asinh(s)
    denom = (1.0 - float(np.dot(x, x))) * (1.0 - float(np.dot(y, y)))
    return 2.0 * math.asinh(math.sqrt(sq / denom))


def hyp_dist_array(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Vectorized half-space distance between rows of ``x`` and ``y``."""
    x = np.atleast_2d(x)
    y = np.atleast_2d(y)
    sq = np.sum((x - y) ** 2, axis=-1)
    return 2.0 * np.arcsinh(np.sqrt(sq / (4.0 * x[..., -1] * y[..., -1])))


# -- model conversions --------------------------------------------------------


def _inversion_to_other_model(c: np.ndarray) -> np.ndarray:
    # inversion in the sphere of radius sqrt(2) about -e_n; an involution that
    # swaps the unit ball and the upper half-space and sends 0 to e_n
    s = np.zeros_like(c)
    s[..., -1] = -1.0
    d = c - s
    return s + 2.0 * d / np.sum(d * d, axis=-1, keepdims=True)


def ball_to_halfspace(p: HPoint) -> HPoint:
    if p.model != "ball":
        raise UsageError("expected a ball-model point")
    return HPoint(_inversion_to_other_model(p.coords), "halfspace")


def halfspace_to_ball(p: HPoint) -> HPoint:
    if p.model != "halfspace":
        raise UsageError("expected a half-space point")
    return HPoint(_inversion_to_other_model(p.coords), "ball")


def halfspace_to_klein(x: np.ndarray) -> np.ndarray:
    """Half-space coordinates to the Klein (projective) model.

    Geodesic hyperplanes are flat in the Klein model, so geodesic polyhedra
    are Euclidean convex hulls of their vertex images there.
    """
    b = _inversion_to_other_model(np.asarray(x, dtype=float))
    r2 = np.sum(b * b, axis=-1, keepdims=True)
    return 2.0 * b / (1.0 + r2)


def klein_to_halfspace(k: np.ndarray) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    r2 = np.sum(k * k, axis=-1, keepdims=True)
    b = k / (1.0 + np.sqrt(np.maximum(1.0 - r2, 0.0)))
    return _inversion_to_other_model(b)


# -- geodesic hyperplanes -----------------------------------------------------


@dataclass(frozen=True, eq=False)
class GeodesicHyperplane:
    """Vertical hyperplane ``{normal . x' = offset}`` or hemisphere ``|x - center| = radius``.

    ``normal`` and ``center`` live in the first n-1 coordinates.
    """

    kind: Literal["vertical", "hemisphere"]
    dim: int
    normal: np.ndarray | None = None
    offset: float = 0.0
    center: np.ndarray | None = None
    radius: float = 0.0

    def __post_init__(self):
        if self.kind == "vertical":
            nu = np.array(self.normal, dtype=float).reshape(-1)
            if nu.size != self.dim - 1:
                raise UsageError("vertical plane normal must have n-1 components")
            norm = float(np.linalg.norm(nu))
            if abs(norm - 1.0) > 1e-12:
                raise UsageError("vertical plane normal must be a unit vector")
            nu.setflags(write=False)
            object.__setattr__(self, "normal", nu)
            object.__setattr__(self, "offset", float(self.offset))
        elif self.kind == "hemisphere":
            c = np.array(self.center, dtype=float).reshape(-1)
            if c.size != self.dim - 1:
                raise UsageError("hemisphere center must have n-1 components")
            if not self.radius > 0.0:
                raise UsageError("hemisphere radius must be positive")
            c.setflags(write=False)
            object.__setattr__(self, "center", c)
            object.__setattr__(self, "radius", float(self.radius))
        else:
            raise UsageError(f"unknown plane kind {self.kind!r}")

    @classmethod
    def vertical(cls, normal, offset: float = 0.0) -> "GeodesicHyperplane":
        nu = np.asarray(normal, dtype=float)
        return cls("vertical", nu.size + 1, normal=nu / np.linalg.norm(nu), offset=offset / np.linalg.norm(nu))

    @classmethod
    def hemisphere(cls, center, radius: float) -> "GeodesicHyperplane":
        c = np.atleast_1d(np.asarray(center, dtype=float))
        return cls("hemisphere", c.size + 1, center=c, radius=radius)

    @classmethod
    def through_points(cls, points) -> "GeodesicHyperplane":
        """The geodesic hyperplane through ``n`` half-space points.

        Solves for the generalized sphere ``A|x|^2 + b.x' + C = 0`` (no x_n
        term, hence orthogonal to the ideal boundary).
        """
        pts = np.array([_as_coords(p) for p in points], dtype=float)
        m, n = pts.shape
        if m != n:
            raise UsageError(f"need exactly n={n} points, got {m}")
        scale = max(1.0, float(np.max(np.abs(pts))))
        q = pts / scale
        rows = np.column_stack([np.sum(q * q, axis=1), q[:, :-1], np.ones(m)])
        _, sv, vt = np.linalg.svd(rows)
        if sv[n - 1] < 1e-10 * sv[0]:
            raise UsageError("points do not determine a unique hyperplane")
        coef = vt[-1]
        a, b, c = coef[0], coef[1:-1], coef[-1]
        bn = float(np.linalg.norm(b))
        if abs(a) <= 1e-13 * max(bn, abs(c)):
            return cls("vertical", n, normal=b / bn, offset=-c / bn * scale)
        center = -b / (2.0 * a)
        r2 = float(np.dot(center, center)) - c / a
        return cls("hemisphere", n, center=center * scale, radius=math.sqrt(r2) * scale)

    @classmethod
    def through_point_normal(cls, p, direction) -> "GeodesicHyperplane":
        """The geodesic hyperplane through ``p`` whose Euclidean normal at ``p`` is ``direction``."""
        x = _as_coords(p)
        v = np.asarray(direction, dtype=float)
        v = v / np.linalg.norm(v)
        if abs(v[-1]) < 1e-14:
            nu = v[:-1] / np.linalg.norm(v[:-1])
            return cls("vertical", x.size, normal=nu, offset=float(np.dot(nu, x[:-1])))
        t = x[-1] / v[-1]
        center = x - t * v
        return cls("hemisphere", x.size, center=center[:-1], radius=abs(t))

    def sinh_dist(self, x) -> np.ndarray:
        """Intrinsically oriented sinh of the signed distance (vectorized)."""
        x = np.asarray(x, dtype=float)
        if self.kind == "vertical":
            return (x[..., :-1] @ self.normal - self.offset) / x[..., -1]
        d = x[..., :-1] - self.center
        r2 = np.sum(d * d, axis=-1) + x[..., -1] ** 2
        return (r2 - self.radius**2) / (2.0 * self.radius * x[..., -1])

    def contains(self, p, tol: float = 1e-10) -> bool:
        return bool(abs(math.asinh(float(self.sinh_dist(_as_coords(p))))) < tol)

    def __repr__(self):
        if self.kind == "vertical":
            return f"GeodesicHyperplane.vertical({self.normal.tolist()}, {self.offset!r})"
        return f"GeodesicHyperplane.hemisphere({self.center.tolist()}, {self.radius!r})"


@dataclass(frozen=True)
class Reflection:
    """Hyperbolic reflection in a geodesic hyperplane (half-space model)."""

    plane: GeodesicHyperplane

    def apply(self, x) -> np.ndarray:
        x = np.array(x, dtype=float)
        pl = self.plane
        if pl.kind == "vertical":
            s = x[..., :-1] @ pl.normal - pl.offset
            out = x.copy()
            out[..., :-1] -= 2.0 * s[..., None] * pl.normal
            return out
        c = np.zeros(pl.dim)
        c[:-1] = pl.center
        d = x - c
        return c + pl.radius**2 * d / np.sum(d * d, axis=-1, keepdims=True)

    def __call__(self, p: HPoint) -> HPoint:
        if p.model != "halfspace":
            return halfspace_to_ball(self(ball_to_halfspace(p)))
        if p.dim != self.plane.dim:
            raise UsageError("dimension mismatch between point and plane")
        return HPoint(self.apply(p.coords), "halfspace")


def reflect(r: Reflection, p: HPoint) -> HPoint:
    return r(p)


def signed_dist_to_plane(p: HPoint, plane: GeodesicHyperplane, side_marker: HPoint) -> float:
    """Signed hyperbolic distance to ``plane``, positive on the side of ``side_marker``."""
    if p.model != "halfspace":
        p = ball_to_halfspace(p)
    if side_marker.model != "halfspace":
        side_marker = ball_to_halfspace(side_marker)
    fm = float(plane.sinh_dist(side_marker.coords))
    if abs(math.asinh(fm)) < 1e-12:
        raise UsageError("side marker lies on the plane")
    sign = 1.0 if fm > 0 else -1.0
    return sign * math.asinh(float(plane.sinh_dist(p.coords)))


def signed_dist_array(x, plane: GeodesicHyperplane, sign: float = 1.0) -> np.ndarray:
    return sign * np.arcsinh(plane.sinh_dist(x))


@dataclass(frozen=True)
class Equidistant:
    """Level set ``{signed distance to plane = rho}``; positive side chosen by ``sign``."""

    plane: GeodesicHyperplane
    rho: float
    sign: float

    def level(self, x) -> np.ndarray:
        return self.sign * np.arcsinh(self.plane.sinh_dist(x)) - self.rho

    def contains(self, x, tol: float = 1e-10) -> np.ndarray:
        return np.abs(self.level(x)) < tol

    def euclidean_shape(self) -> dict:
        """Euclidean description: tilted hyperplane (vertical planes) or sphere (hemispheres)."""
        pl = self.plane
        s = self.sign * math.sinh(self.rho)
        if pl.kind == "vertical":
            normal = np.append(pl.normal, -s)
            return {"kind": "plane", "normal": normal, "offset": pl.offset,
                    "tilt": math.atan(abs(math.sinh(self.rho)))}
        center = np.append(pl.center, s * pl.radius)
        return {"kind": "sphere", "center": center, "radius": pl.radius * math.cosh(self.rho)}

    def sample(self, m: int, rng: np.random.Generator, height=(0.3, 3.0)) -> np.ndarray:
        pl = self.plane
        n = pl.dim
        s = self.sign * math.sinh(self.rho)
        if pl.kind == "vertical":
            xn = rng.uniform(*height, size=m)
            base = rng.normal(size=(m, n - 1))
            base -= np.outer(base @ pl.normal, pl.normal)
            base += pl.offset * pl.normal
            pts = np.column_stack([base + np.outer(s * xn, pl.normal), xn])
            return pts
        shape = self.euclidean_shape()
        v = rng.normal(size=(4 * m + 8, n))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        pts = shape["center"] + shape["radius"] * v
        pts = pts[pts[:, -1] > 1e-3 * shape["radius"]]
        return pts[:m]


def equidistant_offset(plane: GeodesicHyperplane, rho: float, side_marker: HPoint) -> Equidistant:
    fm = float(plane.sinh_dist(side_marker.coords))
    if abs(math.asinh(fm)) < 1e-12:
        raise UsageError("side marker lies on the plane")
    return Equidistant(plane, float(rho), 1.0 if fm > 0 else -1.0)


def nearest_point_on_plane(p: HPoint, plane: GeodesicHyperplane) -> HPoint:
    """Foot of the perpendicular from ``p`` to ``plane``."""
    x = p.coords
    if plane.kind == "vertical":
        s = float(np.dot(x[:-1], plane.normal) - plane.offset)
        # the perpendicular geodesic is the semicircle centred on the plane's trace
        foot = x.copy()
        foot[:-1] -= s * plane.normal
        foot[-1] = math.hypot(x[-1], s)
        return HPoint(foot)
    # send the hemisphere to a vertical plane by inversion about a point of its trace
    c = np.zeros(plane.dim)
    c[:-1] = plane.center
    c[0] += plane.radius
    inv = lambda y: c + (2.0 * plane.radius) ** 2 * (y - c) / np.dot(y - c, y - c)  # noqa: E731
    y = inv(x)
    # the image of the hemisphere is the vertical plane through its image centre
    nu = np.zeros(plane.dim - 1)
    nu[0] = -1.0
    off = float(np.dot(inv(np.append(plane.center, plane.radius))[:-1], nu))
    img = GeodesicHyperplane("vertical", plane.dim, normal=nu, offset=off)
    return HPoint(inv(nearest_point_on_plane(HPoint(y), img).coords))


def geodesic_point(p: HPoint, direction, length: float) -> HPoint:
    """Point at hyperbolic distance ``length`` from ``p`` along the unit direction."""
    x = p.coords
    v = np.asarray(direction, dtype=float)
    v = v / np.linalg.norm(v)
    horiz = v[:-1]
    hn = float(np.linalg.norm(horiz))
    if hn < 1e-15:
        out = x.copy()
        out[-1] = x[-1] * math.exp(math.copysign(length, v[-1]))
        return HPoint(out)
    eta = horiz / hn
    theta = math.atan2(v[-1], hn)
    # rotation about i in the upper half-plane by angle theta - pi/2
    alpha = 0.5 * (theta - math.pi / 2.0)
    z = 1j * math.exp(length)
    w = (math.cos(alpha) * z + math.sin(alpha)) / (-math.sin(alpha) * z + math.cos(alpha))
    w *= x[-1]
    out = x.copy()
    out[:-1] += w.real * eta
    out[-1] = w.imag
    return HPoint(out)


def unit_tangent_between(p: HPoint, q: HPoint) -> np.ndarray:
    """Euclidean unit tangent at ``p`` of the geodesic towards ``q``."""
    x, y = p.coords, q.coords
    d = y - x
    horiz = d[:-1]
    hn = float(np.linalg.norm(horiz))
    if hn < 1e-15 * max(1.0, abs(d[-1])):
        v = np.zeros_like(x)
        v[-1] = math.copysign(1.0, d[-1])
        return v
    eta = horiz / hn
    # work in the vertical 2-plane: z = s + i y
    z0 = complex(0.0, x[-1])
    z1 = complex(hn, y[-1])
    # geodesic circle centre on the real axis through z0 and z1
    sc = (abs(z1) ** 2 - abs(z0) ** 2) / (2.0 * (z1.real - z0.real))
    t = 1j * (z0 - sc)
    if (t.real * hn + t.imag * (y[-1] - x[-1])) < 0:
        t = -t
    t /= abs(t)
    v = np.zeros_like(x)
    v[:-1] = t.real * eta
    v[-1] = t.imag
    return v


__all__ = [
    "HPoint", "GeodesicHyperplane", "Reflection", "Equidistant",
    "hyp_dist", "hyp_dist_array", "reflect", "signed_dist_to_plane", "signed_dist_array",
    "equidistant_offset", "ball_to_halfspace", "halfspace_to_ball",
    "halfspace_to_klein", "klein_to_halfspace", "nearest_point_on_plane",
    "geodesic_point", "unit_tangent_between",
]
