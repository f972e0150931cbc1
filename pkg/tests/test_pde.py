"""Discrete operator, Newton solver, capped sweeps, reflection and field files."""

import math

import numpy as np
import pytest

from minigraph.config import SolverConfig
from minigraph.domain_io import linear_data
from minigraph.domains import (
    BoundaryData, build_second_scherk_polyhedron, clip_by_plane, make_admissible_polyhedron, make_ball, make_box,
    rotational_from_angle,
)
from minigraph.errors import SolverFailure, UsageError
from minigraph.geometry import GeodesicHyperplane
from minigraph.pde import (
    FluxOperator, GridOperator, adjacent_sign_pairs, doubled_domain, fields_equal, format_field, interpolate,
    odd_solve, parse_field, pointwise_residual, read_field, reflect_extend, residual_euclidean,
    residual_hyperbolic, restrict, scherk_second_type, seed_problem, solve_capped_family, solve_dirichlet,
    solve_with_boundary, write_field,
)
from minigraph.raster import COLLAR, DIRICHLET, EXTERIOR, INTERIOR, rasterize
from minigraph.surfaces import ProfileParams, lambda_profile_many, m1_height_many

CFG = SolverConfig()
TOL = CFG.slack
TRIANGLE = [(-0.5, 1.0), (0.5, 1.0), (0.0, 2.0)]
PLANE_X1 = GeodesicHyperplane.vertical(np.array([1.0]), 0.0)


def exact_on(raster, f):
    u = np.full(raster.dims, np.nan)
    act = np.argwhere(raster.node_class != EXTERIOR)
    u[tuple(act.T)] = f(raster.physical(raster.origin + raster.h * act))
    return u


def m05(x):
    return lambda_profile_many(ProfileParams.md(2, 0.5), np.arcsinh(x[:, 0] / x[:, -1]))


def scherk(x):
    return np.log(np.cos(x[:, 0]) / np.cos(x[:, 1]))


def max_interior(raster, a):
    return float(np.max(np.abs(a[raster.node_class == INTERIOR])))


class TestPointwiseResidual:
    def test_constant(self):
        assert residual_hyperbolic(np.full((3, 3), 2.5), 1.3, 0.1) == 0.0
        assert residual_hyperbolic(np.full((3, 3, 3), -1.0), 0.7, 0.1, 3) == 0.0

    def test_affine_euclidean(self):
        i, j = np.meshgrid([-1, 0, 1], [-1, 0, 1], indexing="ij")
        assert residual_euclidean(0.3 * i * 0.1 - 2.0 * j * 0.1 + 4.0, 0.1) == pytest.approx(0.0, abs=1e-12)
        assert residual_euclidean(np.zeros((3, 3)), 0.1) == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(UsageError):
            residual_hyperbolic(np.zeros((3, 3)), 1.0, 0.1, n=3)
        with pytest.raises(UsageError):
            residual_hyperbolic(np.zeros((3, 3)), 0.0, 0.1)

    @pytest.mark.parametrize("case", ["m05", "scherk"])
    def test_second_order(self, case):
        if case == "m05":
            dom, f = make_box((-0.5, 0.5), (0.5, 1.5)).with_data(BoundaryData.function(m05)), m05
        else:
            dom = make_box((-1.2, -1.2), (1.2, 1.2), "euclidean").with_data(BoundaryData.function(scherk))
            f = scherk
        res = []
        for N in (65, 129, 257):
            r = rasterize(dom, (dom.shape.bbox[1][0] - dom.shape.bbox[0][0]) / (N - 1))
            res.append(max_interior(r, pointwise_residual(r, exact_on(r, f))))
        ratios = [res[k] / res[k + 1] for k in range(2)]
        assert all(3.0 < q < 5.0 for q in ratios), ratios

    def test_three_dimensional_decay(self):
        # n = 3 is still pre-asymptotic at these sizes (ratios 1.8, 2.6, then 3.2 at N = 65)
        def md(x):
            return lambda_profile_many(ProfileParams.md(3, 0.5), np.arcsinh(x[:, 0] / x[:, -1]))

        dom = make_box((0.25, -0.5, 0.5), (1.25, 0.5, 1.5)).with_data(BoundaryData.function(md))
        res = []
        for N in (9, 17, 33):
            r = rasterize(dom, 1.0 / (N - 1))
            res.append(max_interior(r, pointwise_residual(r, exact_on(r, md))))
        assert res[0] > res[1] > res[2]
        assert res[1] / res[2] > 2.4


@pytest.mark.parametrize("op_cls", [GridOperator, FluxOperator])
@pytest.mark.parametrize("space", ["hyperbolic", "euclidean"])
def test_jacobian_matches_finite_differences(op_cls, space):
    dom = make_ball((0.0, 1.0), 0.6, space).with_data(linear_data([0.2, 1.0, -0.5]))
    r = rasterize(dom, 1 / 8)
    op = op_cls(r)
    rng = np.random.default_rng(0)
    u = np.nan_to_num(r.boundary_values().ravel())
    u[op.interior] = rng.normal(size=op.m) * 0.3
    J = op.jacobian(u).toarray()
    eps = 1e-6
    fd = np.empty_like(J)
    for k, node in enumerate(op.interior):
        up, dn = u.copy(), u.copy()
        up[node] += eps
        dn[node] -= eps
        fd[:, k] = (op.newton_residual(up) - op.newton_residual(dn)) / (2 * eps)
    assert np.max(np.abs(J - fd)) < 1e-6 * max(1.0, np.max(np.abs(J)))


def test_flux_jacobian_with_collar():
    dom = make_admissible_polyhedron(TRIANGLE).with_data({0: 0.0, 1: 0.0, 2: BoundaryData.inf(1)})
    r = rasterize(dom, 1 / 16)
    op = FluxOperator(r)
    u = np.nan_to_num(r.boundary_values(4.0).ravel())
    u[op.interior] = np.linspace(0.0, 2.0, op.m)
    J = op.jacobian(u).toarray()
    k = op.m // 2
    up, dn = u.copy(), u.copy()
    up[op.interior[k]] += 1e-6
    dn[op.interior[k]] -= 1e-6
    fd = (op.newton_residual(up) - op.newton_residual(dn)) / 2e-6
    assert np.max(np.abs(J[:, k] - fd)) < 1e-5 * max(1.0, np.max(np.abs(J)))


class TestSolver:
    def test_constant_data(self):
        r = rasterize(make_ball((0.0, 1.0), 0.8).with_data(2.5), 1 / 16)
        f = solve_dirichlet(r)
        assert f.converged and f.iterations == 0
        assert np.max(np.abs(f.u[r.node_class != EXTERIOR] - 2.5)) < 1e-12

    @pytest.mark.parametrize("case", ["m05", "scherk"])
    def test_manufactured_error_second_order(self, case):
        if case == "m05":
            dom, f = make_box((-0.5, 0.5), (0.5, 1.5)).with_data(BoundaryData.function(m05)), m05
        else:
            dom = make_box((-1.2, -1.2), (1.2, 1.2), "euclidean").with_data(BoundaryData.function(scherk))
            f = scherk
        err = []
        for N in (33, 65):
            r = rasterize(dom, (dom.shape.bbox[1][0] - dom.shape.bbox[0][0]) / (N - 1))
            err.append(max_interior(r, solve_dirichlet(r).u - exact_on(r, f)))
        assert 3.0 < err[0] / err[1] < 5.0

    def test_three_dimensional_ball(self):
        r = rasterize(make_ball((0.0, 0.0, 1.0), 0.6).with_data(linear_data([0.0, 1.0, 0.5, 0.2])), 1 / 8)
        f = solve_dirichlet(r)
        assert f.converged and f.residual_norm < CFG.newton_tol
        g = r.values[r.node_class == DIRICHLET]
        inner = f.u[r.node_class == INTERIOR]
        assert g.min() - TOL <= inner.min() and inner.max() <= g.max() + TOL

    def test_comparison_and_translation(self):
        dom = make_admissible_polyhedron(TRIANGLE)
        r1 = rasterize(dom.with_data(linear_data([0.0, 1.0, 0.3])), 1 / 32)
        r2 = rasterize(dom.with_data(linear_data([0.25, 1.0, 0.3])), 1 / 32)
        u1, u2 = solve_dirichlet(r1).u, solve_dirichlet(r2).u
        inner = r1.node_class == INTERIOR
        assert np.all(u1[inner] <= u2[inner] + TOL)
        assert np.max(np.abs((u2 - u1)[inner] - 0.25)) < TOL

    def test_uniqueness_from_two_initial_guesses(self):
        r = rasterize(make_ball((0.0, 1.0), 0.8).with_data(linear_data([0.0, 2.0, -1.0])), 1 / 16)
        a = solve_dirichlet(r)
        b = solve_dirichlet(r, initial=np.zeros(r.dims))
        inner = r.node_class == INTERIOR
        assert np.max(np.abs(a.u - b.u)[inner]) < TOL

    def test_infinite_data_rejected(self):
        r = rasterize(make_admissible_polyhedron(TRIANGLE).with_data({0: 0.0, 1: 0.0, 2: BoundaryData.inf(1)}), 1 / 16)
        with pytest.raises(UsageError):
            solve_dirichlet(r)

    def test_failure_carries_residual(self):
        jump = BoundaryData.function(lambda x: 40.0 * np.sign(x[:, 0]))
        r = rasterize(make_ball((0.0, 1.0), 0.8).with_data(jump), 1 / 16)
        cfg = SolverConfig(max_iters=1, picard_iters=0, max_halvings=1)
        with pytest.raises(SolverFailure) as info:
            solve_dirichlet(r, cfg)
        assert info.value.residual_norm > cfg.newton_tol
        assert math.isfinite(info.value.max_gradient)

    def test_nonfinite_boundary_rejected(self):
        r = rasterize(make_ball((0.0, 1.0), 0.8).with_data(0.0), 1 / 16)
        b = r.boundary_values()
        b[r.node_class == DIRICHLET] = np.inf
        with pytest.raises(UsageError):
            solve_with_boundary(r, b)


class TestCapped:
    def test_zero_cap(self):
        dom = make_admissible_polyhedron(TRIANGLE).with_data({0: 0.0, 1: 0.0, 2: BoundaryData.inf(1)})
        res = solve_capped_family(rasterize(dom, 1 / 16), CFG, caps=[0.0])
        f = res.last
        assert np.all(f.u[f.raster.node_class != EXTERIOR] == 0.0)

    def test_triangle_monotone_and_bounded(self):
        dom = make_admissible_polyhedron(TRIANGLE).with_data({0: 0.0, 1: 0.0, 2: BoundaryData.inf(1)})
        r = rasterize(dom, 1 / 32)
        res = solve_capped_family(r, CFG, caps=[1.0, 2.0, 4.0, 8.0, 16.0])
        inner = r.node_class == INTERIOR
        for a, b in zip(res.fields, res.fields[1:]):
            assert np.all(b.u[inner] - a.u[inner] > 0.0)
        for cap, f in zip(res.caps, res.fields):
            assert np.all(f.u[inner] > 0.0) and np.all(f.u[inner] < cap)
        assert all(x > y for x, y in zip(res.cauchy, res.cauchy[1:]))
        assert res.monotone_margin > 0

    def test_rotational_geometric_decay(self):
        dom = rotational_from_angle(2, 0.3, 1.5, 0.8).with_data({0: 0.0, 1: BoundaryData.inf(1)})
        res = solve_capped_family(rasterize(dom, 1 / 32), CFG, caps=[1.0, 2.0, 4.0, 8.0, 16.0, 32.0])
        ratios = [b / a for a, b in zip(res.cauchy, res.cauchy[1:])]
        assert max(ratios[-3:]) < 0.75

    def test_needs_infinite_piece(self):
        with pytest.raises(UsageError):
            solve_capped_family(rasterize(make_ball((0.0, 1.0), 0.8).with_data(0.0), 1 / 16), CFG)


def half_disk(h=1 / 32, data=None):
    dom = clip_by_plane(make_ball((0.0, 1.0), 1.0), PLANE_X1, (0.5, 1.0))
    g = data or BoundaryData.function(lambda x: x[:, 0] * (1.0 + x[:, 1]))
    dom = dom.with_data({0: g, 1: 0.0})
    return solve_dirichlet(rasterize(dom, h), CFG)


class TestReflection:
    def test_agrees_with_direct_solve(self):
        f = half_disk()
        ext = reflect_extend(f, PLANE_X1, CFG)
        direct = odd_solve(f, PLANE_X1, CFG)
        act = ext.raster.node_class != EXTERIOR
        assert np.max(np.abs(ext.u - direct.u)[act]) < TOL

    def test_zero_on_plane_and_odd(self):
        f = half_disk()
        ext = reflect_extend(f, PLANE_X1, CFG)
        r = ext.raster
        x = r.physical(r.coords())
        on = (np.abs(x[:, 0]) < 1e-12) & (r.node_class.ravel() != EXTERIOR)
        assert on.any() and np.all(ext.u.ravel()[on] == 0.0)
        # the lattice is symmetric about x1 = 0
        assert np.allclose(r.origin[0], -(r.origin[0] + r.h * (r.dims[0] - 1)))
        inner = r.node_class == INTERIOR
        assert np.max(np.abs(ext.u + ext.u[::-1, :])[inner & inner[::-1, :]]) < 1e-12

    def test_involution_and_restriction(self):
        f = half_disk()
        ext = reflect_extend(f, PLANE_X1, CFG)
        twice = reflect_extend(ext, PLANE_X1, CFG)
        assert np.array_equal(twice.u, ext.u, equal_nan=True)
        back = restrict(ext, f.raster, CFG)
        inner = f.raster.node_class == INTERIOR
        assert np.max(np.abs(back.u - f.u)[inner]) < TOL

    def test_nonzero_plane_data_rejected(self):
        dom = clip_by_plane(make_ball((0.0, 1.0), 1.0), PLANE_X1, (0.5, 1.0)).with_data({0: 1.0, 1: 1.0})
        with pytest.raises(UsageError):
            doubled_domain(dom, PLANE_X1)
        with pytest.raises(UsageError):
            doubled_domain(dom, GeodesicHyperplane.vertical(np.array([1.0]), 0.3))

    def test_interpolate_exact_on_linear(self):
        f = half_disk(data=BoundaryData.const(0.0))
        r = f.raster
        u = exact_on(r, lambda x: 1.0 + 2.0 * x[:, 0] - x[:, 1])
        pts = np.array([[0.31, 1.07], [0.52, 0.77]])
        assert np.allclose(interpolate(r, u, pts * r.scale), 1.0 + 2.0 * pts[:, 0] - pts[:, 1])


class TestSecondScherk:
    @pytest.fixture(scope="class")
    @staticmethod
    def assembled():
        dom = build_second_scherk_polyhedron((0.0, 1.0), (1.0, 1.0), 2)
        cfg = SolverConfig(h=1 / 32, K=5)
        field, seed = scherk_second_type(dom, cfg)
        return dom, field, seed

    def test_signs_alternate(self, assembled):
        dom, _, _ = assembled
        pairs = adjacent_sign_pairs(dom)
        assert len(pairs) == len(dom.pieces)
        assert all(a * b == -1 for _, _, a, b in pairs)

    def test_wedge_oddness(self, assembled):
        _, field, _ = assembled
        r = field.raster
        inner = r.node_class == INTERIOR
        both = inner & inner[::-1, :]
        assert np.max(np.abs(field.u + field.u[::-1, :])[both]) < TOL

    def test_collar_carries_cap(self, assembled):
        _, field, seed = assembled
        r = field.raster
        collar = r.node_class == COLLAR
        assert np.all(np.abs(field.u[collar]) == seed.caps[-1])

    def test_octahedron_signs(self):
        dom = build_second_scherk_polyhedron((0.0, 0.0, 1.0), (1.0, 1.0, 1.0), 2)
        signs = [p.data.sign for p in dom.pieces]
        assert len(signs) == 8 and signs.count(1) == 4

    def test_seed_requires_builder_domain(self):
        with pytest.raises(UsageError):
            seed_problem(make_ball((0.0, 1.0), 0.5))


class TestFieldFiles:
    def test_roundtrip_bitwise(self, tmp_path):
        f = half_disk(h=1 / 16)
        p = write_field(f, tmp_path / "f.txt")
        g = read_field(p)
        assert fields_equal(f, g)
        assert format_field(g) == format_field(f)

    def test_capped_roundtrip(self, tmp_path):
        dom = make_admissible_polyhedron(TRIANGLE).with_data({0: 0.0, 1: 0.0, 2: BoundaryData.inf(1)})
        f = solve_capped_family(rasterize(dom, 1 / 16), CFG, caps=[1.0, 2.0]).last
        g = parse_field(format_field(f))
        assert fields_equal(f, g) and g.cap == 2.0
        assert np.array_equal(g.raster.collar_sign, f.raster.collar_sign)

    @pytest.mark.parametrize("text", [
        "",
        "# minigraph field\nspace hyperbolic\nn 2\n",
        "# minigraph field\nspace hyperbolic\nn 2\nh 0.1\norigin 0 0\ndims 3 3\nscale 1\ndelta 0\ncap none\n"
        "nodes 2\n0 0 interior 1.0\n",
        "# minigraph field\nspace hyperbolic\nn 2\nh 0.1\norigin 0 0\ndims 3 3\nscale 1\ndelta 0\ncap none\n"
        "nodes 1\n0 7 interior 1.0\n",
    ])
    def test_malformed(self, text):
        with pytest.raises(UsageError):
            parse_field(text)
