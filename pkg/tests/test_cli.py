import json

import numpy as np
import pytest

from ridgecut.cli import main
from ridgecut.geometry import box, write_mesh
from ridgecut.newton import ConcaveGridFn, DomainSpec


def run(out, *argv):
    return main([*argv, "--out", str(out)])


def comparisons(out):
    return json.loads((out / "comparisons.json").read_text())


@pytest.mark.parametrize("which", ["1", "2", "3", "4"])
def test_examples_pass(tmp_path, which):
    assert run(tmp_path, "example", which) == 0
    assert (tmp_path / "report.json").exists()
    assert (tmp_path / "cuts.csv").read_text().startswith("t,cap_area")


def test_outputs_are_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(a, "example", "1") == 0
    assert run(b, "example", "1") == 0
    for name in ("report.json", "cuts.csv", "comparisons.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


@pytest.fixture
def cube_mesh(tmp_path):
    path = tmp_path / "cube.obj"
    write_mesh(box([0, 0, 0], [1, 1, 1]), path)
    return path


def test_cut_sweep_on_a_mesh(tmp_path, cube_mesh):
    out = tmp_path / "o"
    code = run(out, "cut-sweep", str(cube_mesh), "--r0", "0.5,0,0", "--e1", "0,-1,0",
               "--e2", "0,0,-1", "--lambdas", "0.7071067811865476,0.7071067811865476",
               "--count", "6", "--expect-two-atom", "--bl-tol", "0.05")
    assert code == 0
    names = [c["name"] for c in comparisons(out)["comparisons"]]
    assert names == ["moment_residual", "bl_to_two_atom_limit"]


def test_failed_comparison_exits_2(tmp_path, cube_mesh):
    code = run(tmp_path, "cut-sweep", str(cube_mesh), "--r0", "0.5,0,0", "--e1", "0,-1,0",
               "--e2", "0,0,-1", "--e", "0,-1,-1", "--count", "4",
               "--expect-two-atom", "--bl-tol", "1e-12")
    assert code == 2
    statuses = {c["name"]: c["status"] for c in comparisons(tmp_path)["comparisons"]}
    assert statuses["bl_to_two_atom_limit"] == "FAIL"


def test_cut_sweep_off_ridge_exits_1(tmp_path, cube_mesh, capsys):
    code = run(tmp_path, "cut-sweep", str(cube_mesh), "--r0", "0.5,0.5,0", "--e1", "0,-1,0",
               "--e2", "0,0,-1", "--e", "0,-1,-1")
    assert code == 1
    assert "classification" in capsys.readouterr().err


def test_resistance_commands(tmp_path):
    assert run(tmp_path, "resistance", "--solve2d", "0.5", "--prop2", "31") == 0
    data = comparisons(tmp_path)
    assert {c["name"] for c in data["comparisons"]} == {"F_2d", "measure_minimum"}
    assert data["solve2d"]["F_value"] == pytest.approx(0.75)


def test_resistance_of_a_function_file(tmp_path, capsys):
    u = ConcaveGridFn.sample(DomainSpec.square(0.5), lambda x, y: 1 - x * x - y * y, 1.0, 64)
    u.save(tmp_path / "u.json")
    assert run(tmp_path / "o", "resistance", str(tmp_path / "u.json")) == 0
    first = capsys.readouterr().out.splitlines()[0]
    assert 0.5 < float(first.split("=")[1]) < 1.0


def test_resistance_improvement(tmp_path):
    assert run(tmp_path, "resistance", "--improve", "--k", "2", "--grid", "128",
               "--count", "4") == 0
    rows = (tmp_path / "improvement.csv").read_text().splitlines()
    assert rows[0] == "t,delta_F,cap_area,ratio" and len(rows) == 5


def test_resistance_needs_something_to_do(tmp_path):
    assert run(tmp_path, "resistance") == 1


def test_construct(tmp_path):
    q = float(np.pi / 4)
    spec = tmp_path / "k.json"
    spec.write_text(json.dumps({"alpha": q, "beta": q, "intervals": [[-q, -q], [0, q / 2], [q, q]]}))
    out = tmp_path / "o"
    code = run(out, "construct", str(spec), "--slices", "32", "--atoms", "16", "--count", "4")
    assert code in (0, 2)
    for name in ("chain.json", "body.obj", "report.json", "comparisons.json"):
        assert (out / name).exists()
    data = comparisons(out)
    assert data["coefficients"]["cap"] > 0
