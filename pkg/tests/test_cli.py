import subprocess
import sys

import pytest

from bsvem.cli import main
from bsvem.harness import ConvergenceReport
from bsvem.mesh import load_mesh
from bsvem.vtk import read_vtk


def test_mesh_and_solve(tmp_path, capsys):
    out = tmp_path / "m.json"
    assert main(["mesh", "--n", "5", "--out", str(out)]) == 0
    assert "N=112" in capsys.readouterr().out
    assert load_mesh(out).num_boundary_nodes == 56
    vtk = tmp_path / "s.vtk"
    mtx = tmp_path / "K.mtx"
    assert main(["solve", "--mesh", str(out), "--vtk", str(vtk), "--matrix-market", str(mtx)]) == 0
    text = capsys.readouterr().out
    assert "combined" in text
    assert set(read_vtk(vtk)["fields"]) == {"U", "V", "U_error", "V_error"}
    assert mtx.read_text().startswith("%%MatrixMarket matrix coordinate real symmetric")


def test_converge_writes_csv(tmp_path, capsys):
    csv = tmp_path / "c.csv"
    assert main(["converge", "--levels", "5,10", "--csv", str(csv)]) == 0
    rep = ConvergenceReport.from_csv(csv.read_text())
    assert [r.N for r in rep.rows] == [112, 799]


def test_bench(capsys):
    assert main(["bench", "--n", "6", "--cached-only"]) == 0
    assert "local builds" in capsys.readouterr().out


@pytest.mark.parametrize(
    "argv",
    [
        ["mesh", "--n", "1"],
        ["converge", "--levels", "10,5"],
        ["solve", "--mesh", "/nonexistent.json"],
        ["mesh"],
        ["frobnicate"],
    ],
)
def test_validation_errors_exit_1(argv, capsys):
    code = None
    try:
        code = main(argv)
    except SystemExit as exc:
        code = exc.code
    assert code == 1


def test_numerical_failure_exit_2(monkeypatch, capsys):
    from bsvem import cli
    from bsvem.exceptions import NoConvergence

    def boom(*a, **k):
        raise NoConvergence("stalled")

    monkeypatch.setattr(cli, "solve", boom)
    assert main(["solve", "--n", "5"]) == 2
    assert "stalled" in capsys.readouterr().err


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "bsvem", "mesh", "--domain", "box", "--n", "2"], capture_output=True, text=True)
    assert res.returncode == 0 and "N=27" in res.stdout
