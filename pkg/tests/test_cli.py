import json
import subprocess
import sys

import numpy as np
import pytest

from minigraph.cli import (
    EXIT_OK, EXIT_USAGE, export_csv, main, parse_grid, read_csv_export,
)
from minigraph.errors import UsageError
from minigraph.pde import read_field
from minigraph.raster import EXTERIOR
from minigraph.surfaces import ProfileParams, lambda_profile

BALL = "space hyperbolic n=2\nshape ball center=0.0,1.0 radius=0.6\npiece 0 data=linear:0.1,0.2,0.3\n"
TRIANGLE = ("space hyperbolic n=2\nshape polyhedron vertices=-0.5,1.0;0.5,1.0;0.0,2.0\n"
            "piece 0 data=0.0\npiece 1 data=0.0\npiece 2 data=+inf\n")


@pytest.fixture
def work(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "ball.dom").write_text(BALL)
    (tmp_path / "tri.dom").write_text(TRIANGLE)
    return tmp_path


@pytest.fixture
def solved(work):
    assert main(["solve", "--domain", "ball.dom", "-o", "ball.field", "--h", "0.0625"]) == EXIT_OK
    return work / "ball.field"


def test_parse_grid():
    assert list(parse_grid("0:0.5:2")) == [0.0, 0.5, 1.0, 1.5, 2.0]
    assert list(parse_grid("1, 2.5")) == [1.0, 2.5]
    for bad in ("", "1:0:2", "a:b:c"):
        with pytest.raises(UsageError):
            parse_grid(bad)


class TestProfile:
    def test_md_csv(self, work):
        assert main(["profile", "--family", "Md", "--n", "2", "--d", "0.5", "--rho", "0:0.5:1",
                     "-o", "p.csv"]) == EXIT_OK
        lines = (work / "p.csv").read_text().splitlines()
        assert lines[0] == "# family Md"
        rows = [ln.split(",") for ln in lines if ln and not ln.startswith("#")][1:]
        assert len(rows) == 3
        want = lambda_profile(ProfileParams.md(2, 0.5), 1.0).value
        assert float(rows[-1][1]) == want
        man = json.loads((work / "p.csv.manifest.json").read_text())
        assert man["subcommand"] == "profile" and man["exit_code"] == 0

    def test_stdout(self, work, capsys):
        assert main(["profile", "--family", "M1", "--n", "3", "--rho", "0.5,1"]) == EXIT_OK
        assert "param,value,error_estimate" in capsys.readouterr().out

    def test_empty_grid(self, work, capsys):
        assert main(["profile", "--family", "M1", "--n", "2", "--rho", ""]) == EXIT_USAGE
        assert "error" in capsys.readouterr().err

    def test_unknown_family(self, work):
        assert main(["profile", "--family", "nope", "--n", "2"]) == EXIT_USAGE


class TestSolve:
    def test_writes_field_log_and_manifest(self, solved):
        log = (solved.parent / "ball.field.log").read_text().splitlines()
        assert log[0] == "# iteration residual" and log[-1].startswith("# converged")
        f = read_field(solved)
        assert f.converged
        man = json.loads((solved.parent / "ball.field.manifest.json").read_text())
        assert set(man["outputs"]) == {"ball.field", "ball.field.log"}
        assert man["config_overrides"] == {"h": 0.0625}

    def test_malformed_domain(self, work):
        (work / "bad.dom").write_text("shape ball\n")
        assert main(["solve", "--domain", "bad.dom", "-o", "x.field"]) == EXIT_USAGE
        assert main(["solve", "--domain", "missing.dom", "-o", "x.field"]) == EXIT_USAGE

    def test_infinite_data_refused(self, work):
        assert main(["solve", "--domain", "tri.dom", "-o", "x.field"]) == EXIT_USAGE

    def test_solver_failure_exit(self, work):
        (work / "steep.dom").write_text(
            "space hyperbolic n=2\nshape ball center=0.0,1.0 radius=0.8\npiece 0 data=linear:0,40,0\n")
        # an unreachable tolerance makes Newton give up; the log survives, the field is not written
        code = main(["solve", "--domain", "steep.dom", "-o", "s.field", "--h", "0.0625", "--max-iters", "2",
                     "--newton-tol", "1e-30"])
        assert code == 3
        assert (work / "s.field.log").read_text().splitlines()[-1].startswith("# failed")
        assert not (work / "s.field").exists()


class TestVerify:
    def test_self_test_fails(self, solved, capsys):
        code = main(["verify", "max-principle", "--field", "ball.field", "--self-test", "--report", "r.txt"])
        assert code == 1
        lines = (solved.parent / "r.txt").read_text().splitlines()
        assert lines[0].startswith("CHECK max-principle pass")
        assert lines[1].startswith("CHECK max-principle-selftest fail") and "node=" in lines[1]

    def test_quadrature_json(self, work):
        assert main(["verify", "quadrature", "--n-list", "2", "--json", "q.json"]) == EXIT_OK
        body = json.loads((work / "q.json").read_text())
        assert body["failed"] == 0 and body["checks"][0]["check_id"] == "quadrature-n2"

    def test_random_comparison(self, work, capsys):
        code = main(["verify", "random-comparison", "--domain", "ball.dom", "--pairs", "2", "--seed", "3",
                     "--h", "0.0625"])
        out = capsys.readouterr().out
        assert code == EXIT_OK and out.count("CHECK") == 6

    def test_missing_arguments(self, work):
        assert main(["verify", "max-principle"]) == EXIT_USAGE


class TestExport:
    def test_csv_roundtrip(self, solved):
        assert main(["export", "--field", "ball.field", "--format", "csv", "-o", "u.csv"]) == EXIT_OK
        f = read_field(solved)
        x, u = read_csv_export((solved.parent / "u.csv").read_text())
        act = f.raster.node_class != EXTERIOR
        assert len(u) == int(act.sum())
        assert np.array_equal(np.sort(u), np.sort(f.u[act]))
        assert (solved.parent / "u.csv").read_text() == export_csv(f)

    def test_obj(self, solved):
        assert main(["export", "--field", "ball.field", "--format", "obj", "-o", "u.obj"]) == EXIT_OK
        text = (solved.parent / "u.obj").read_text()
        assert text.count("\nv ") > 0 and text.count("\nf ") > 0

    def test_vtk(self, solved):
        assert main(["export", "--field", "ball.field", "--format", "vtk", "-o", "u.vtk"]) == EXIT_OK
        text = (solved.parent / "u.vtk").read_text()
        f = read_field(solved)
        assert "STRUCTURED_POINTS" in text
        start = text.index("SCALARS active")
        flags = [int(t) for t in text[start:].split("\n", 2)[2].split()]
        assert sum(flags) == int((f.raster.node_class != EXTERIOR).sum())

    def test_obj_needs_n2(self, work):
        (work / "b3.dom").write_text("space hyperbolic n=3\nshape ball center=0,0,1 radius=0.5\npiece 0 data=1\n")
        assert main(["solve", "--domain", "b3.dom", "-o", "b3.field", "--h", "0.125"]) == EXIT_OK
        assert main(["export", "--field", "b3.field", "--format", "obj", "-o", "b3.obj"]) == EXIT_USAGE


class TestReplay:
    def test_identical(self, solved, capsys):
        capsys.readouterr()
        assert main(["replay", "ball.field.manifest.json"]) == EXIT_OK
        out = [ln for ln in capsys.readouterr().out.splitlines() if ln.startswith(("identical", "MISMATCH"))]
        assert sorted(out) == ["identical ball.field", "identical ball.field.log"]

    def test_changed_output_detected(self, solved, capsys):
        man = json.loads((solved.parent / "ball.field.manifest.json").read_text())
        man["outputs"]["ball.field"] = "0" * 64
        (solved.parent / "m.json").write_text(json.dumps(man))
        assert main(["replay", "m.json"]) == 4
        assert "MISMATCH ball.field" in capsys.readouterr().out

    def test_changed_input_refused(self, solved):
        (solved.parent / "ball.dom").write_text(BALL.replace("0.6", "0.5"))
        assert main(["replay", "ball.field.manifest.json"]) == EXIT_USAGE


class TestScherk:
    def test_triangle_sweep(self, work):
        code = main(["scherk", "--domain", "tri.dom", "--out-dir", "sw", "--h", "0.0625", "--K", "3"])
        assert code == EXIT_OK
        names = sorted(p.name for p in (work / "sw").iterdir())
        assert {"cap00.field", "cap03.field", "core.field", "sweep.log"} <= set(names)
        assert sum(n.startswith("cap") and n.endswith(".field") for n in names) == 4

    def test_second_type(self, work):
        code = main(["scherk", "--second-type", "--n", "2", "--k", "2", "--out-dir", "s2", "--h", "0.0625",
                     "--K", "3"])
        assert code == EXIT_OK and (work / "s2" / "assembled.field").exists()


def test_module_entry_point(work):
    out = subprocess.run([sys.executable, "-m", "minigraph.cli", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and "minigraph" in out.stdout
