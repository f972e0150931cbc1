"""Acceptance suite: nine end-to-end criteria at their stated tolerances.

Each criterion prints one ``ACCEPTANCE <k> PASS|FAIL ...`` line and then
asserts.  Under pytest the lines are repeated in the terminal summary; run
``python tests/test_acceptance.py`` to get them without pytest.
"""

from __future__ import annotations

import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from minigraph import verify as V
from minigraph.cli import main as cli_main
from minigraph.config import SolverConfig
from minigraph.domains import (
    BoundaryData, build_second_scherk_polyhedron, clip_by_plane, make_admissible_polyhedron, make_ball, make_box,
)
from minigraph.geometry import GeodesicHyperplane
from minigraph.pde import (
    adjacent_sign_pairs, pointwise_residual, reflect_extend, odd_solve, scherk_second_type, solve_capped_family,
    solve_dirichlet,
)
from minigraph.raster import EXTERIOR, INTERIOR, rasterize
from minigraph.surfaces import (
    ProfileParams, catenoid_height, height_limit, invert_catenoid_height, lambda_profile, lambda_profile_many,
    m1_height, mu_plus, translation_height,
)

sys.path.insert(0, str(Path(__file__).parent))
import oracles  # noqa: E402

CFG = SolverConfig()
LINES: list[str] = []  # collected for the terminal summary (see conftest.py)
TRIANGLE = [(-0.5, 1.0), (0.5, 1.0), (0.0, 2.0)]


def emit(k: int, ok: bool, summary: str, seconds: float, limit: float) -> str:
    budget = f"budget {limit:g}s" if math.isfinite(limit) else "no time budget"
    line = f"ACCEPTANCE {k} {'PASS' if ok else 'FAIL'} {summary} ({seconds:.1f}s, {budget})"
    LINES.append(line)
    print(line, flush=True)
    return line


# -- 1. quadrature limits -------------------------------------------------------------------


def criterion_1():
    reps = V.quadrature_limit_suite((2, 3), a_max=20.0, tol=1e-3)
    worst = {r.check_id: r.details for r in reps}
    ok = all(r.status == V.PASS for r in reps)
    gaps = ", ".join(f"{cid}: |R-lim|={abs(d['R'] - d['limit']):.1e} |T-lim|={abs(d['T'] - d['limit']):.1e}"
                     for cid, d in worst.items())
    return ok, gaps


# -- 2. oracle equivalence ------------------------------------------------------------------


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


def criterion_2():
    rng = np.random.default_rng(20240601)
    worst = {}
    cases = {
        "lambda_profile": lambda: (lambda d, n, r: (lambda_profile(ProfileParams.md(n, d), r).value,
                                                    oracles.lam(d, n, r)))(
            float(rng.uniform(0.05, 0.95)), int(rng.integers(2, 5)), float(rng.uniform(0.1, 3.0))),
        "catenoid_height": lambda: (lambda a, n: (catenoid_height(a, n).value, oracles.catenoid_R(a, n)))(
            float(rng.uniform(0.1, 5.0)), int(rng.integers(2, 5))),
        "translation_height": lambda: (lambda a, n: (translation_height(a, n).value, oracles.translation_T(a, n)))(
            float(rng.uniform(0.1, 5.0)), int(rng.integers(2, 5))),
        "mu_plus": lambda: (lambda a, n, dr: (mu_plus(a, a + dr, n).value, oracles.mu_plus(a, a + dr, n)))(
            float(rng.uniform(0.1, 3.0)), int(rng.integers(2, 5)), float(rng.uniform(0.2, 4.0))),
        "m1_height": lambda: (lambda n, r: (m1_height(n, r).value, oracles.m1(n, r)))(
            int(rng.integers(2, 5)), float(rng.uniform(0.05, 4.0))),
    }
    for name, draw in cases.items():
        errs = [_rel(*draw()) for _ in range(20)]
        worst[name] = max(errs)
    ok = all(v < 1e-7 for v in worst.values())
    return ok, "max rel err " + ", ".join(f"{k}={v:.1e}" for k, v in worst.items())


# -- 3. manufactured-solution order ---------------------------------------------------------


def _m05(x):
    return lambda_profile_many(ProfileParams.md(2, 0.5), np.arcsinh(x[:, 0] / x[:, -1]))


def _scherk(x):
    return np.log(np.cos(x[:, 0]) / np.cos(x[:, 1]))


def _exact_on(raster, f):
    u = np.full(raster.dims, np.nan)
    act = np.argwhere(raster.node_class != EXTERIOR)
    u[tuple(act.T)] = f(raster.physical(raster.origin + raster.h * act))
    return u


def criterion_3():
    cases = {
        "M_0.5": (make_box((-0.5, 0.5), (0.5, 1.5)).with_data(BoundaryData.function(_m05)), _m05, 1.0),
        "Scherk": (make_box((-1.2, -1.2), (1.2, 1.2), "euclidean").with_data(BoundaryData.function(_scherk)),
                   _scherk, 2.4),
    }
    ok = True
    parts = []
    for name, (dom, f, width) in cases.items():
        res, err = [], []
        for N in (65, 129, 257):
            r = rasterize(dom, width / (N - 1))
            inner = r.node_class == INTERIOR
            exact = _exact_on(r, f)
            res.append(float(np.max(np.abs(pointwise_residual(r, exact)[inner]))))
            err.append(float(np.max(np.abs((solve_dirichlet(r, CFG).u - exact)[inner]))))
        rr = [res[i] / res[i + 1] for i in range(2)]
        er = [err[i] / err[i + 1] for i in range(2)]
        ok &= all(3.0 <= q <= 5.0 for q in rr + er)
        parts.append(f"{name} residual ratios {rr[0]:.2f},{rr[1]:.2f} error ratios {er[0]:.2f},{er[1]:.2f}")
    return ok, "; ".join(parts)


# -- 4. maximum principle and comparison ----------------------------------------------------


def _random_data(rng):
    a = rng.normal(size=3)
    w = rng.normal(size=2) * 2.0
    b, phase = rng.normal(), rng.uniform(0, 2 * math.pi)

    def g(x):
        return a[0] + a[1] * x[:, 0] + a[2] * x[:, -1] + b * np.sin(x @ w + phase)

    return g


def _pair(rng):
    g1 = _random_data(rng)
    c = abs(rng.normal()) * 0.5
    bump = _random_data(rng)

    def g2(x):
        # g2 - g1 = c + |bump| >= 0
        return g1(x) + c + np.abs(bump(x))

    return g1, g2


def criterion_4():
    rng = np.random.default_rng(7)
    shapes = {"ball": make_ball((0.0, 1.0), 0.8), "triangle": make_admissible_polyhedron(TRIANGLE)}
    worst = math.inf
    failures = 0
    checked = 0
    for name, shape in shapes.items():
        for _ in range(20):
            g1, g2 = _pair(rng)
            f1 = solve_dirichlet(rasterize(shape.with_data(BoundaryData.function(g1)), 1 / 32), CFG)
            f2 = solve_dirichlet(rasterize(shape.with_data(BoundaryData.function(g2)), 1 / 32), CFG)
            for rep in (V.max_principle(f1, CFG), V.max_principle(f2, CFG), V.comparison(f1, f2, CFG)):
                checked += 1
                worst = min(worst, rep.margin)
                failures += rep.failed
    return failures == 0, f"{checked} checks over 40 pairs, worst margin {worst:.2e} (tol {CFG.slack:g})"


# -- 5. first Scherk type -------------------------------------------------------------------


def criterion_5():
    dom = make_admissible_polyhedron(TRIANGLE).with_data({0: 0.0, 1: 0.0, 2: BoundaryData.inf(1)})
    raster = rasterize(dom, 1 / 128)
    res = solve_capped_family(raster, SolverConfig(h=1 / 128))
    inner = raster.node_class == INTERIOR
    increase = min(float(np.min(b.u[inner] - a.u[inner])) for a, b in zip(res.fields, res.fields[1:]))
    bounded = all(np.all(f.u[inner] > 0) and np.all(f.u[inner] < t) for t, f in zip(res.caps, res.fields))
    # cauchy[k] compares caps[k] and caps[k + 1]; factors for the doublings after cap 16
    start = res.caps.index(16.0)
    factors = [res.cauchy[k] / res.cauchy[k + 1] for k in range(start, len(res.cauchy) - 1)]
    ok = (res.caps[-1] == 256.0 and increase >= -CFG.slack and bounded and min(factors) >= 1.5)
    return ok, (f"caps {res.caps[0]:g}..{res.caps[-1]:g}, min step {increase:.1e}, 0<v<t {bounded}, "
                f"Cauchy factors after 16: {', '.join(f'{q:.2f}' for q in factors)}")


# -- 6. reflection principle ----------------------------------------------------------------


def criterion_6():
    plane = GeodesicHyperplane.vertical(np.array([1.0]), 0.0)
    dom = clip_by_plane(make_ball((0.0, 1.0), 1.0), plane, (0.5, 1.0))
    dom = dom.with_data({0: BoundaryData.function(lambda x: x[:, 0] * (1.0 + x[:, 1])), 1: 0.0})
    field = solve_dirichlet(rasterize(dom, 1 / 64), CFG)
    ext = reflect_extend(field, plane, CFG)
    direct = odd_solve(field, plane, CFG)
    act = ext.raster.node_class != EXTERIOR
    diff = float(np.max(np.abs(ext.u - direct.u)[act]))
    return diff <= CFG.slack, f"max |odd extension - doubled solve| = {diff:.1e} (tol {CFG.slack:g})"


# -- 7. second Scherk type ------------------------------------------------------------------


def criterion_7():
    counts = {}
    for n, k in ((2, 2), (2, 3), (3, 2)):
        a0 = np.append(np.zeros(n - 1), 1.0)
        counts[(n, k)] = len(build_second_scherk_polyhedron(a0, np.ones(n), k, n).pieces)
    counts_ok = all(c == 2 ** (n - 1) * k for (n, k), c in counts.items()) and counts[(3, 2)] == 8
    dom = build_second_scherk_polyhedron((0.0, 1.0), (1.0, 1.0), 2)
    field, _ = scherk_second_type(dom, CFG)
    signs = V.alternating_signs(dom)
    wedge = [g for g in dom.shape.params["generators"] if g.plane.kind == "vertical"][0]
    odd = V.mirror_symmetry(field, wedge, -1, CFG)
    pairs = len(adjacent_sign_pairs(dom))
    ok = counts_ok and signs.status == V.PASS and odd.status == V.PASS
    return ok, (f"face counts {dict((f'{n},{k}', c) for (n, k), c in counts.items())}, sign pairs {pairs} "
                f"{signs.status}, wedge oddness {odd.status} (defect {-odd.margin:.1e})")


# -- 8. threshold probe ---------------------------------------------------------------------


def criterion_8():
    rho0 = invert_catenoid_height(1.0, 2)
    below = V.height_threshold_probe(rho0, 0.9, 2, CFG)
    above = V.height_threshold_probe(rho0, 1.7, 2, CFG)
    ok = (below.status == V.PASS and below.note == "consistent-with-existence"
          and above.status == V.PASS and above.note.startswith("consistent-with-nonexistence")
          and 1.7 > height_limit(2))
    return ok, (f"rho0={rho0:.6f}; t=0.9 {below.status} {below.note} margin {below.margin:.1e}; "
                f"t=1.7 {above.status} {above.note}")


# -- 9. determinism -------------------------------------------------------------------------


def criterion_9(workdir: Path):
    old = os.getcwd()
    os.chdir(workdir)
    try:
        Path("ball.dom").write_text("space hyperbolic n=2\nshape ball center=0.0,1.0 radius=0.7\n"
                                    "piece 0 data=linear:0.2,1.0,-0.4\n")
        Path("tri.dom").write_text("space hyperbolic n=2\nshape polyhedron vertices=-0.5,1.0;0.5,1.0;0.0,2.0\n"
                                   "piece 0 data=0.0\npiece 1 data=0.0\npiece 2 data=+inf\n")
        runs = [
            (["profile", "--family", "catenoid-R", "--n", "2", "--a", "0.5:0.5:3", "-o", "R.csv"], "R.csv"),
            (["solve", "--domain", "ball.dom", "-o", "ball.field", "--h", "0.03125"], "ball.field"),
            (["scherk", "--domain", "tri.dom", "--out-dir", "sweep", "--h", "0.03125", "--K", "4"],
             "sweep/cap00.field"),
            (["export", "--field", "ball.field", "--format", "vtk", "-o", "ball.vtk"], "ball.vtk"),
            (["verify", "random-comparison", "--domain", "ball.dom", "--pairs", "3", "--seed", "5",
              "--h", "0.0625", "--report", "rc.txt"], "rc.txt"),
        ]
        outcomes = []
        for argv, first in runs:
            code = cli_main(argv)
            man = Path(first + ".manifest.json")
            if code != 0 or not man.exists():
                outcomes.append(False)
                continue
            recorded = json.loads(man.read_text())["outputs"]
            outcomes.append(cli_main(["replay", str(man)]) == 0 and len(recorded) > 0)
        return all(outcomes), f"{sum(outcomes)}/{len(runs)} manifests replayed bit-for-bit"
    finally:
        os.chdir(old)


# -- pytest entry points --------------------------------------------------------------------


def _run(k, fn, limit, *args):
    t = time.perf_counter()
    ok, summary = fn(*args)
    dt = time.perf_counter() - t
    emit(k, ok, summary, dt, limit)
    return ok, summary, dt


def test_criterion_1_quadrature_limits():
    ok, summary, dt = _run(1, criterion_1, 5)
    assert ok, summary
    assert dt < 5


def test_criterion_2_oracle_equivalence():
    ok, summary, dt = _run(2, criterion_2, 120)
    assert ok, summary


def test_criterion_3_manufactured_order():
    ok, summary, dt = _run(3, criterion_3, 180)
    assert ok, summary


def test_criterion_4_max_principle_and_comparison():
    ok, summary, dt = _run(4, criterion_4, 300)
    assert ok, summary


def test_criterion_5_first_scherk_type():
    ok, summary, dt = _run(5, criterion_5, 600)
    assert ok, summary


def test_criterion_6_reflection():
    ok, summary, dt = _run(6, criterion_6, 120)
    assert ok, summary


def test_criterion_7_second_scherk_type():
    ok, summary, dt = _run(7, criterion_7, 600)
    assert ok, summary


@pytest.mark.slow
def test_criterion_8_threshold_probe():
    ok, summary, dt = _run(8, criterion_8, 600)
    assert ok, summary


def test_criterion_9_determinism(tmp_path):
    ok, summary, dt = _run(9, criterion_9, math.inf, tmp_path)
    assert ok, summary


if __name__ == "__main__":
    import tempfile

    results = []
    for k, fn, limit in [(1, criterion_1, 5), (2, criterion_2, 120), (3, criterion_3, 180), (4, criterion_4, 300),
                         (5, criterion_5, 600), (6, criterion_6, 120), (7, criterion_7, 600),
                         (8, criterion_8, 600)]:
        results.append(_run(k, fn, limit)[0])
    with tempfile.TemporaryDirectory() as tmp:
        results.append(_run(9, criterion_9, math.inf, Path(tmp))[0])
    sys.exit(0 if all(results) else 1)
