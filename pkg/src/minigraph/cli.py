"""Command-line front end.

Subcommands: ``profile``, ``solve``, ``scherk``, ``verify``, ``export`` and
``replay``.  Every subcommand that writes files also writes a JSON run
manifest next to its primary output; ``replay`` re-executes a manifest and
compares the SHA-256 digests of the outputs.

Exit codes: 0 success, 1 verification failure, 2 usage or parse error,
3 solver failure, 4 internal consistency violation.
"""

from __future__ import annotations

import argparse
import contextlib
import hashlib
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import SolverConfig, load_config
from .errors import ConsistencyError, MinigraphError, NonConvergenceError, SolverFailure, UsageError

logger = logging.getLogger("minigraph")

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_SOLVER, EXIT_CONSISTENCY = 0, 1, 2, 3, 4

PROFILE_FAMILIES = {
    # name: (formula identifier, grid variable)
    "Md": ("lambda_d(rho) = int_a^rho d / sqrt(cosh^{2n-2}(s) - d^2) ds (odd extension)", "rho"),
    "M1": ("h(rho) = int_rho^inf ds / sqrt(cosh^{2n-2}(s) - 1)", "rho"),
    "catenoid-R": ("R(a) = catenoid half-height with neck parameter a", "a"),
    "catenoid": ("catenoid height at distance rho from the axis, neck parameter a", "rho"),
    "translation-T": ("T(a) = lim_{rho->inf} mu_+(a, rho)", "a"),
    "mu-plus": ("mu_+(a, rho) = translation surface height", "rho"),
}


# -- small helpers -----------------------------------------------------------------------------


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def parse_grid(text: str) -> np.ndarray:
    """``start:step:stop`` (inclusive), a comma list, or a single value."""
    text = text.strip()
    try:
        if ":" in text:
            parts = [float(v) for v in text.split(":")]
            if len(parts) != 3:
                raise UsageError(f"grid {text!r} must be start:step:stop")
            start, step, stop = parts
            if not step > 0 or stop < start:
                raise UsageError(f"grid {text!r} is empty")
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            return start + step * np.arange(count)
        vals = np.array([float(v) for v in text.split(",") if v.strip()])
    except UsageError:
        raise
    except ValueError as exc:
        raise UsageError(f"bad grid {text!r}") from exc
    if vals.size == 0:
        raise UsageError(f"grid {text!r} is empty")
    return vals


def parse_ints(text: str) -> list[int]:
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"bad integer list {text!r}") from exc
    if not vals:
        raise UsageError("empty integer list")
    return vals


def parse_vector(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError as exc:
        raise UsageError(f"bad vector {text!r}") from exc


def _real(x) -> str:
    return repr(float(x))


class Run:
    """Bookkeeping of one invocation: inputs, outputs and the manifest."""

    def __init__(self, args, argv):
        self.args = args
        self.argv = list(argv)
        self.inputs: list[str] = []
        self.outputs: list[str] = []
        self.overrides: dict = {}

    def input(self, path) -> Path:
        path = Path(path)
        if not path.exists():
            raise UsageError(f"input file not found: {path}")
        self.inputs.append(str(path))
        return path

    def output(self, path) -> Path:
        path = Path(path)
        if path.parent and not path.parent.exists():
            path.parent.mkdir(parents=True, exist_ok=True)
        self.outputs.append(str(path))
        return path

    def manifest(self) -> dict:
        return {
            "tool": "minigraph",
            "version": __version__,
            "subcommand": self.args.command,
            "argv": self.argv,
            "cwd": os.getcwd(),
            "seed": getattr(self.args, "seed", None),
            "config_overrides": self.overrides,
            "inputs": {p: sha256_file(p) for p in self.inputs},
            "outputs": {p: sha256_file(p) for p in self.outputs if Path(p).exists()},
        }

    def write_manifest(self, exit_code: int):
        if getattr(self.args, "no_manifest", False) or not self.outputs:
            return None
        man = self.manifest()
        man["exit_code"] = exit_code
        path = Path(getattr(self.args, "manifest", None) or (self.outputs[0] + ".manifest.json"))
        path.write_text(json.dumps(man, indent=2, sort_keys=True) + "\n")
        logger.info("manifest written to %s", path)
        return path


def _config(args, run: Run) -> SolverConfig:
    base = SolverConfig()
    if getattr(args, "config", None):
        base = load_config(run.input(args.config), base)
    overrides = {
        "h": getattr(args, "h", None),
        "delta": getattr(args, "delta", None),
        "newton_tol": getattr(args, "newton_tol", None),
        "max_iters": getattr(args, "max_iters", None),
        "t0": getattr(args, "t0", None),
        "K": getattr(args, "K", None),
        "scheme": getattr(args, "scheme", None),
        "margin": getattr(args, "margin", None),
    }
    overrides = {k: v for k, v in overrides.items() if v is not None}
    run.overrides = overrides
    return base.with_overrides(**overrides)


def _add_config_flags(p: argparse.ArgumentParser):
    g = p.add_argument_group("solver configuration (flags override --config)")
    g.add_argument("--config", help="flat key = value config file")
    g.add_argument("--h", type=float, help="grid spacing")
    g.add_argument("--delta", type=float, help="minimum height of the repositioned domain")
    g.add_argument("--newton-tol", type=float, dest="newton_tol")
    g.add_argument("--max-iters", type=int, dest="max_iters")
    g.add_argument("--t0", type=float, help="first cap")
    g.add_argument("--K", type=int, help="number of cap doublings")
    g.add_argument("--scheme", choices=("flux", "nondivergence"))
    g.add_argument("--margin", type=float, help="core margin in units of h")


def _add_manifest_flags(p: argparse.ArgumentParser):
    p.add_argument("--manifest", help="manifest path (default: <primary output>.manifest.json)")
    p.add_argument("--no-manifest", action="store_true", help=argparse.SUPPRESS)


# -- profile -----------------------------------------------------------------------------------


def _profile_rows(family: str, n: int, args) -> tuple[np.ndarray, list]:
    from . import surfaces as S

    def need(name):
        val = getattr(args, name)
        if val is None:
            raise UsageError(f"family {family} needs --{name}")
        return val

    if family in ("catenoid-R", "translation-T"):
        grid = parse_grid(need("a"))
        fn = S.catenoid_height if family == "catenoid-R" else S.translation_height
        return grid, [fn(float(a), n) for a in grid]
    grid = parse_grid(need("rho"))
    if family == "Md":
        params = S.ProfileParams.md(n, float(need("d")), None if args.a is None else float(args.a))
        return grid, [S.lambda_profile(params, float(r)) for r in grid]
    if family == "M1":
        return grid, [S.m1_height(n, float(r)) for r in grid]
    a = float(need("a"))
    if family == "catenoid":
        return grid, [S.catenoid_profile(a, float(r), n) for r in grid]
    return grid, [S.mu_plus(a, float(r), n) for r in grid]


def cmd_profile(args, run: Run) -> int:
    formula, var = PROFILE_FAMILIES[args.family]
    grid, results = _profile_rows(args.family, args.n, args)
    lines = [f"# family {args.family}", f"# formula {formula}", f"# n {args.n}"]
    if args.d is not None:
        lines.append(f"# d {_real(args.d)}")
    if args.family in ("catenoid", "mu-plus"):
        lines.append(f"# a {_real(float(args.a))}")
    lines.append(f"# param {var}")
    lines.append("param,value,error_estimate")
    for x, r in zip(grid, results):
        lines.append(f"{_real(x)},{_real(r.value)},{_real(r.error_estimate)}")
    text = "\n".join(lines) + "\n"
    if args.out:
        run.output(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- solve -------------------------------------------------------------------------------------


def _write_log(path: Path, history, extra: list[str]):
    lines = ["# iteration residual"] + [f"{i} {_real(r)}" for i, r in enumerate(history)] + extra
    path.write_text("\n".join(lines) + "\n")


def cmd_solve(args, run: Run) -> int:
    from .domain_io import read_domain
    from .pde import solve_dirichlet, write_field
    from .raster import rasterize

    cfg = _config(args, run)
    domain = read_domain(run.input(args.domain))
    if domain.infinite_pieces():
        raise UsageError("domain has infinite boundary data; use the scherk subcommand")
    raster = rasterize(domain, cfg.h, cfg.delta)
    out = run.output(args.out)
    log = run.output(args.log or (args.out + ".log"))
    try:
        field = solve_dirichlet(raster, cfg)
    except SolverFailure as exc:
        _write_log(log, exc.history, [f"# failed residual={_real(exc.residual_norm)}"])
        run.outputs.remove(str(out))
        raise
    write_field(field, out)
    _write_log(log, field.history, [f"# converged residual={_real(field.residual_norm)} "
                                    f"iterations={field.iterations}"])
    print(f"solved {int((raster.node_class == 1).sum())} interior nodes; residual {field.residual_norm:.3e}")
    return EXIT_OK


# -- scherk ------------------------------------------------------------------------------------


def _second_type_domain(args):
    from .domains import build_second_scherk_polyhedron

    if args.k is None or args.n is None:
        raise UsageError("--second-type needs --n and --k")
    a0 = parse_vector(args.A0) if args.A0 else np.append(np.zeros(args.n - 1), 1.0)
    lengths = parse_vector(args.lengths) if args.lengths else np.ones(args.n)
    return build_second_scherk_polyhedron(a0, lengths, args.k, args.n)


def cmd_scherk(args, run: Run) -> int:
    from .domain_io import read_domain
    from .pde import solve_capped_family, write_field
    from .pde.scherk import scherk_second_type
    from .pde.solver import HeightField
    from .raster import INTERIOR, rasterize

    cfg = _config(args, run)
    outdir = Path(args.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    if args.second_type:
        domain = _second_type_domain(args)
        field, result = scherk_second_type(domain, cfg)
        write_field(field, run.output(outdir / "assembled.field"))
    else:
        if not args.domain:
            raise UsageError("scherk needs --domain or --second-type")
        domain = read_domain(run.input(args.domain))
        if not domain.infinite_pieces():
            raise UsageError("domain has no infinite boundary piece; use the solve subcommand")
        result = solve_capped_family(rasterize(domain, cfg.h, cfg.delta), cfg)
    prefix = "seed_" if args.second_type else ""
    for k, (cap, f) in enumerate(zip(result.caps, result.fields)):
        write_field(f, run.output(outdir / f"{prefix}cap{k:02d}.field"))
    last = result.last
    # interior nodes outside the core are blanked; boundary and collar nodes keep their values
    keep = result.core_mask | (last.raster.node_class != INTERIOR)
    core = HeightField(last.raster, np.where(keep, last.u, np.nan), last.residual_norm,
                       last.converged, last.iterations, list(last.history), last.cap, last.max_gradient)
    write_field(core, run.output(outdir / f"{prefix}core.field"))
    summary = ["# cap cauchy_to_next"]
    for k, cap in enumerate(result.caps):
        d = result.cauchy[k] if k < len(result.cauchy) else float("nan")
        summary.append(f"{_real(cap)} {_real(d)}")
    summary.append(f"# accepted {'true' if result.accepted else 'false'}")
    summary.append(f"# monotone_margin {_real(result.monotone_margin)}")
    (run.output(outdir / "sweep.log")).write_text("\n".join(summary) + "\n")
    print(f"{len(result.caps)} caps; last core Cauchy difference "
          f"{result.cauchy[-1] if result.cauchy else float('nan'):.3e}; accepted={result.accepted}")
    return EXIT_OK


# -- verify ------------------------------------------------------------------------------------


def _random_pairs(domain, cfg, pairs: int, seed: int):
    """Reports for ``pairs`` random affine data pairs ``g1 <= g2`` on ``domain``."""
    from . import verify as V
    from .domain_io import linear_data
    from .pde import solve_dirichlet
    from .raster import rasterize

    rng = np.random.default_rng(seed)
    reports = []

    def solve(coeffs):
        d = domain.with_data({pid: linear_data(coeffs) for pid in domain.piece_ids})
        return solve_dirichlet(rasterize(d, cfg.h, cfg.delta), cfg)

    for k in range(pairs):
        c1 = rng.uniform(-1.0, 1.0, domain.n + 1)
        c2 = c1.copy()
        c2[0] += rng.uniform(0.0, 0.5)
        f1, f2 = solve(c1), solve(c2)
        reports.append(V.max_principle(f1, cfg, check_id=f"max-principle-{k}a"))
        reports.append(V.max_principle(f2, cfg, check_id=f"max-principle-{k}b"))
        reports.append(V.comparison(f1, f2, cfg, check_id=f"comparison-{k}"))
    return reports


def _attach_domain(field, domain):
    from dataclasses import replace

    field.raster = replace(field.raster, domain=domain)
    return field


def cmd_verify(args, run: Run) -> int:
    from . import verify as V
    from .domain_io import parse_plane, read_domain
    from .pde import read_field

    cfg = _config(args, run)
    suite = args.suite
    reports: list = []

    def field(name):
        path = getattr(args, name)
        if not path:
            raise UsageError(f"suite {suite} needs --{name.replace('_', '-')}")
        return read_field(run.input(path))

    def domain():
        if not args.domain:
            raise UsageError(f"suite {suite} needs --domain")
        return read_domain(run.input(args.domain))

    if suite == "quadrature":
        reports = V.quadrature_limit_suite(parse_ints(args.n_list or "2,3"))
    elif suite == "max-principle":
        f = field("field")
        reports = [V.max_principle(f, cfg)]
        if args.self_test:
            reports.append(V.self_test(f, cfg)[0])
    elif suite == "comparison":
        reports = [V.comparison(field("lower"), field("upper"), cfg)]
    elif suite == "random-comparison":
        reports = _random_pairs(domain(), cfg, args.pairs, args.seed)
    elif suite == "barrier-m1":
        f = field("field")
        if args.plane is None or args.c_minus is None or args.c_plus is None:
            raise UsageError("barrier-m1 needs --plane, --c-minus and --c-plus")
        plane = parse_plane(args.plane, f.raster.space, f.raster.n)
        reports = [V.barrier_sandwich_m1(f, plane, args.c_minus, args.c_plus, cfg, max_rho=args.max_rho)]
    elif suite == "scherk-axis":
        f = _attach_domain(field("field"), domain())
        reports = [V.scherk_axis_monotonicity(f, cfg, expect_sign=args.expect_sign)]
    elif suite == "threshold":
        from .surfaces import invert_catenoid_height

        if args.t is None:
            raise UsageError("threshold needs --t")
        n = args.n or 2
        if args.rho0 is not None:
            rho0 = args.rho0
        elif args.R is not None:
            rho0 = invert_catenoid_height(args.R, n)
        else:
            raise UsageError("threshold needs --rho0 or --R")
        reports = [V.height_threshold_probe(rho0, args.t, n, cfg, h=args.h or 0.05, delta=args.delta or 0.01)]
    elif suite == "reflection":
        from .pde import solve_dirichlet
        from .raster import rasterize

        dom = domain()
        if args.plane is None:
            raise UsageError("reflection needs --plane")
        plane = parse_plane(args.plane, dom.space, dom.n)
        f = solve_dirichlet(rasterize(dom, cfg.h, cfg.delta), cfg)
        reports = [V.reflection_consistency(f, plane, cfg)]
    elif suite == "scherk2":
        from .pde.scherk import scherk_second_type

        dom = _second_type_domain(args)
        reports = [V.alternating_signs(dom)]
        f, _ = scherk_second_type(dom, cfg)
        for j, g in enumerate(dom.shape.params["generators"]):
            if getattr(g.plane, "kind", None) == "vertical":
                reports.append(V.mirror_symmetry(f, g, -1, cfg, check_id=f"wedge-oddness-{j}"))
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(f"unknown suite {suite!r}")

    text = V.format_reports(reports)
    sys.stdout.write(text)
    for r in reports:
        if r.note:
            logger.info("%s: %s", r.check_id, r.note)
    if args.report:
        run.output(args.report).write_text(text)
    if args.json:
        run.output(args.json).write_text(V.summary_json(reports))
    failed = sum(r.failed for r in reports)
    inconclusive = sum(r.status == V.INCONCLUSIVE for r in reports)
    print(f"{len(reports)} checks: {failed} failed, {inconclusive} inconclusive")
    return EXIT_VERIFY if failed else EXIT_OK


# -- export ------------------------------------------------------------------------------------


def _node_coords(field, coords: str) -> np.ndarray:
    """Coordinates of every lattice node, shape ``dims + (n,)``."""
    r = field.raster
    grids = np.meshgrid(*[r.origin[i] + r.h * np.arange(r.dims[i]) for i in range(r.n)], indexing="ij")
    pts = np.stack(grids, axis=-1)
    return pts / r.scale if coords == "physical" else pts


def export_csv(field, coords: str = "physical") -> str:
    r = field.raster
    pts = _node_coords(field, coords)
    idx = np.argwhere(r.node_class != 0)
    lines = [",".join(f"x{i + 1}" for i in range(r.n)) + ",u"]
    for ii in idx:
        key = tuple(ii)
        lines.append(",".join(_real(v) for v in pts[key]) + "," + _real(field.u[key]))
    return "\n".join(lines) + "\n"


def export_obj(field, coords: str = "physical", u_scale: float = 1.0, clip: float | None = None) -> str:
    r = field.raster
    if r.n != 2:
        raise UsageError("obj export is only defined for n = 2")
    pts = _node_coords(field, coords)
    u = field.u * u_scale
    if clip is not None:
        u = np.clip(u, -clip, clip)
    ok = (r.node_class != 0) & np.isfinite(u)
    number = -np.ones(r.dims, dtype=np.int64)
    idx = np.argwhere(ok)
    number[tuple(idx.T)] = np.arange(1, len(idx) + 1)
    lines = ["# minigraph graph mesh", f"# vertices {len(idx)}"]
    for ii in idx:
        key = tuple(ii)
        lines.append(f"v {_real(pts[key][0])} {_real(pts[key][1])} {_real(u[key])}")
    for i in range(r.dims[0] - 1):
        for j in range(r.dims[1] - 1):
            a, b, c, d = number[i, j], number[i + 1, j], number[i + 1, j + 1], number[i, j + 1]
            if min(a, b, c, d) > 0:
                lines.append(f"f {a} {b} {c}")
                lines.append(f"f {a} {c} {d}")
    return "\n".join(lines) + "\n"


def export_vtk(field, coords: str = "physical", u_scale: float = 1.0) -> str:
    """Legacy structured points over the bounding box of the non-exterior nodes.

    Exterior nodes inside the box carry NaN; the ``active`` scalar marks the
    non-exterior nodes.
    """
    r = field.raster
    act = np.argwhere(r.node_class != 0)
    lo, hi = act.min(axis=0), act.max(axis=0) + 1
    box = tuple(slice(a, b) for a, b in zip(lo, hi))
    u = np.where(r.node_class[box] != 0, field.u[box] * u_scale, np.nan)
    active = (r.node_class[box] != 0).astype(int)
    dims = list(hi - lo) + [1] * (3 - r.n)
    div = r.scale if coords == "physical" else 1.0
    origin = list((r.origin + r.h * lo) / div) + [0.0] * (3 - r.n)
    spacing = [r.h / div] * r.n + [1.0] * (3 - r.n)
    count = int(np.prod(dims))
    lines = ["# vtk DataFile Version 3.0", "minigraph height field", "ASCII", "DATASET STRUCTURED_POINTS",
             "DIMENSIONS " + " ".join(str(int(d)) for d in dims),
             "ORIGIN " + " ".join(_real(v) for v in origin),
             "SPACING " + " ".join(_real(v) for v in spacing),
             f"POINT_DATA {count}", "SCALARS u double 1", "LOOKUP_TABLE default"]
    # VTK orders points with x varying fastest
    lines.extend(_real(v) if np.isfinite(v) else "nan" for v in u.ravel(order="F"))
    lines += ["SCALARS active int 1", "LOOKUP_TABLE default"]
    lines.extend(str(int(v)) for v in active.ravel(order="F"))
    return "\n".join(lines) + "\n"


def read_csv_export(text: str) -> tuple[np.ndarray, np.ndarray]:
    rows = [ln for ln in text.splitlines()[1:] if ln.strip()]
    data = np.array([[float(v) for v in ln.split(",")] for ln in rows])
    return data[:, :-1], data[:, -1]


def cmd_export(args, run: Run) -> int:
    from .pde import read_field

    field = read_field(run.input(args.field))
    if args.format == "obj" and field.raster.n != 2:
        raise UsageError("obj export is only defined for n = 2")
    if args.format == "csv":
        text = export_csv(field, args.coords)
    elif args.format == "obj":
        text = export_obj(field, args.coords, args.u_scale, args.clip)
    else:
        text = export_vtk(field, args.coords, args.u_scale)
    run.output(args.out).write_text(text)
    return EXIT_OK


# -- replay ------------------------------------------------------------------------------------


@contextlib.contextmanager
def _cwd(path):
    old = os.getcwd()
    os.chdir(path)
    try:
        yield
    finally:
        os.chdir(old)


def cmd_replay(args, run: Run) -> int:
    path = run.input(args.manifest_file)
    try:
        man = json.loads(path.read_text())
        argv, cwd = list(man["argv"]), man["cwd"]
        outputs, inputs = dict(man["outputs"]), dict(man["inputs"])
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"bad manifest {path}: {exc}") from exc
    with _cwd(cwd):
        for p, digest in inputs.items():
            if not Path(p).exists() or sha256_file(p) != digest:
                raise UsageError(f"input {p} changed since the manifest was written")
        code = main(argv + ["--no-manifest"])
        if code != man.get("exit_code", code):
            logger.error("exit code %d differs from the recorded run", code)
        mismatched = [p for p, digest in outputs.items() if not Path(p).exists() or sha256_file(p) != digest]
    for p in sorted(outputs):
        print(f"{'MISMATCH' if p in mismatched else 'identical'} {p}")
    if mismatched:
        return EXIT_CONSISTENCY
    return code


# -- entry point -------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="minigraph", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"minigraph {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("profile", help="tabulate a profile integral as CSV")
    p.add_argument("--family", required=True, choices=sorted(PROFILE_FAMILIES))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=float, help="M_d parameter")
    p.add_argument("--a", help="start/neck parameter (grid for catenoid-R and translation-T)")
    p.add_argument("--rho", help="distance grid start:step:stop or comma list")
    p.add_argument("-o", "--out", help="CSV output (default stdout)")
    _add_manifest_flags(p)

    p = sub.add_parser("solve", help="Dirichlet solve with finite data")
    p.add_argument("--domain", required=True)
    p.add_argument("-o", "--out", required=True, help="field file")
    p.add_argument("--log", help="convergence log (default <out>.log)")
    _add_config_flags(p)
    _add_manifest_flags(p)

    p = sub.add_parser("scherk", help="capped sweep for infinite data")
    p.add_argument("--domain", help="domain file with +inf/-inf pieces")
    p.add_argument("--second-type", action="store_true", help="build the reflected polyhedron")
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--A0", help="seed vertex A0 (default (0,..,0,1))")
    p.add_argument("--lengths", help="seed edge lengths (default all 1)")
    p.add_argument("--out-dir", required=True)
    _add_config_flags(p)
    _add_manifest_flags(p)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("suite", choices=("quadrature", "max-principle", "comparison", "random-comparison",
                                     "barrier-m1", "scherk-axis", "threshold", "reflection", "scherk2"))
    p.add_argument("--n-list", dest="n_list", help="dimensions for the quadrature suite, e.g. 2,3")
    p.add_argument("--field")
    p.add_argument("--lower")
    p.add_argument("--upper")
    p.add_argument("--domain")
    p.add_argument("--plane", help="vertical:<normal>:<offset> or hemisphere:<center>:<radius>")
    p.add_argument("--c-minus", type=float, dest="c_minus")
    p.add_argument("--c-plus", type=float, dest="c_plus")
    p.add_argument("--max-rho", type=float, dest="max_rho")
    p.add_argument("--expect-sign", type=int, choices=(-1, 1), dest="expect_sign")
    p.add_argument("--self-test", action="store_true", help="also check a corrupted copy of the field")
    p.add_argument("--rho0", type=float)
    p.add_argument("--R", type=float, help="catenoid height used to pick rho0")
    p.add_argument("--t", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--A0")
    p.add_argument("--lengths")
    p.add_argument("--pairs", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", help="write the CHECK lines here")
    p.add_argument("--json", help="write a JSON summary here")
    _add_config_flags(p)
    _add_manifest_flags(p)

    p = sub.add_parser("export", help="export a field as csv, obj or vtk")
    p.add_argument("--field", required=True)
    p.add_argument("--format", required=True, choices=("csv", "obj", "vtk"))
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--coords", choices=("physical", "grid"), default="physical")
    p.add_argument("--u-scale", type=float, default=1.0, dest="u_scale", help="vertical exaggeration")
    p.add_argument("--clip", type=float, help="clip |u| in the obj mesh (capped fields)")
    _add_manifest_flags(p)

    p = sub.add_parser("replay", help="re-run a manifest and compare output digests")
    p.add_argument("manifest_file")

    return parser


COMMANDS = {"profile": cmd_profile, "solve": cmd_solve, "scherk": cmd_scherk, "verify": cmd_verify,
            "export": cmd_export, "replay": cmd_replay}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    run = Run(args, argv)
    try:
        code = COMMANDS[args.command](args, run)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        code = EXIT_SOLVER
    except NonConvergenceError as exc:
        print(f"capped family did not converge: {exc}", file=sys.stderr)
        code = EXIT_SOLVER
    except ConsistencyError as exc:
        print(f"consistency violation: {exc}", file=sys.stderr)
        code = EXIT_CONSISTENCY
    except MinigraphError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.command != "replay":
        run.write_manifest(code)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
