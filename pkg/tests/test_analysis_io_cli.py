import math

import numpy as np
import pytest

from swefvs.analysis import ErrorReport, norms, observed_order
from swefvs.cli import EXIT_OK, EXIT_SOLVER, EXIT_USAGE, RunConfig, UsageError, convergence, main
from swefvs.io import read_csv, read_keyvalue, read_vtk_cell_data, write_csv, write_keyvalue, write_vtk
from swefvs.mesh import generate_rect_mesh, load_mesh


# -- norms ------------------------------------------------------------------------------
def test_norms_identical_fields_are_zero():
    a = np.random.default_rng(0).normal(size=50)
    n = norms(a, a)
    assert (n.L1, n.L2, n.Linf) == (0.0, 0.0, 0.0)


def test_norms_constant_error():
    n = norms(np.full(7, 1.25), np.zeros(7), weights=np.arange(1, 8.0))
    assert n.L1 == pytest.approx(1.25) and n.L2 == pytest.approx(1.25) and n.Linf == 1.25


def test_norms_single_cell_error():
    e = np.zeros(10)
    e[3] = -0.4
    n = norms(e, np.zeros(10))
    assert n.L1 == pytest.approx(0.04) and n.Linf == pytest.approx(0.4)
    assert n.L2 == pytest.approx(0.4 / math.sqrt(10))


def test_norms_size_mismatch():
    with pytest.raises(ValueError):
        norms(np.zeros(3), np.zeros(4))
    with pytest.raises(ValueError):
        norms(np.zeros(3), np.zeros(3), weights=np.ones(2))


def test_observed_order_and_report():
    assert observed_order(4e-2, 1e-2, 0.2, 0.1) == pytest.approx(2.0)
    rep = ErrorReport("qx")
    for nx, e in ((8, 1.6e-1), (16, 4e-2), (32, 1e-2)):
        rep.add(nx, 1.0 / nx, norms(np.full(4, e), np.zeros(4)))
    np.testing.assert_allclose(rep.orders(), [2.0, 2.0])
    lines = rep.table().splitlines()
    assert lines[0] == "# variable qx"
    assert lines[1].startswith("resolution,dx,L1")
    assert lines[3].endswith("2.0000,2.0000,2.0000")


# -- writers ---------------------------------------------------------------------------------
def test_csv_roundtrip_full_precision(tmp_path):
    x = np.array([0.1, 1.0 / 3.0, math.pi, -2.5e-300])
    write_csv(tmp_path / "a.csv", {"x": x, "y": 2 * x})
    back = read_csv(tmp_path / "a.csv")
    np.testing.assert_array_equal(back["x"], x)
    np.testing.assert_array_equal(back["y"], 2 * x)


def test_csv_rejects_ragged_columns(tmp_path):
    with pytest.raises(ValueError):
        write_csv(tmp_path / "a.csv", {"x": [1.0, 2.0], "y": [1.0]})


def test_vtk_roundtrip(tmp_path):
    mesh = generate_rect_mesh(2, 3, 1.0, 1.5)
    h = np.linspace(0.5, 1.5, mesh.ncells)
    path = tmp_path / "m.vtk"
    write_vtk(path, mesh, {"h": h, "b": 0 * h})
    text = path.read_text().splitlines()
    assert text[0] == "# vtk DataFile Version 3.0"
    assert "DATASET UNSTRUCTURED_GRID" in text
    assert f"CELLS {mesh.ncells} {4 * mesh.ncells}" in text
    back = read_vtk_cell_data(path)
    np.testing.assert_array_equal(back["h"], h)
    with pytest.raises(ValueError):
        write_vtk(path, mesh, {"h": h[:-1]})


def test_keyvalue_roundtrip(tmp_path):
    path = tmp_path / "kv.txt"
    write_keyvalue(path, {"a": 0.1, "b": "fvs-2r", "c": [0.5, 1.0], "d": 3})
    kv = read_keyvalue(path)
    assert kv == {"a": "0.10000000000000001", "b": "fvs-2r", "c": "0.5,1", "d": "3"}
    assert float(kv["a"]) == 0.1
    path.write_text("no equals sign\n")
    with pytest.raises(ValueError):
        read_keyvalue(path)


# -- command line ------------------------------------------------------------------------------
def run_cli(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_cli_riemann1_writes_csv_at_final_time(tmp_path, capsys):
    code, out, _ = run_cli(["run", "--case", "riemann1", "--order", "1", "--flux", "fvs-2r",
                            "--m", "100", "--out", str(tmp_path)], capsys)
    assert code == EXIT_OK
    data = read_csv(tmp_path / "riemann1_0000.csv")
    assert list(data) == ["x", "b", "h", "u", "q", "psi", "H"]
    assert len(data["x"]) == 100
    manifest = read_keyvalue(tmp_path / "riemann1_manifest.txt")
    assert float(manifest["final_time"]) == pytest.approx(3.0)


def test_cli_manifest_lists_effective_parameters(tmp_path, capsys):
    run_cli(["run", "--case", "riemann2", "--order", "2", "--flux", "godunov-exact",
             "--cfl", "0.5", "--m", "40", "--out", str(tmp_path)], capsys)
    kv = read_keyvalue(tmp_path / "riemann2_manifest.txt")
    for key in ("case", "order", "flux", "cfl", "g", "resolution", "output_times", "final_time",
                "steps", "wall_time", "threads", "formats"):
        assert key in kv
    assert kv["order"] == "2" and kv["flux"] == "godunov-exact"
    assert float(kv["cfl"]) == 0.5 and kv["resolution"] == "M=40"


def test_cli_csv_output_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        run_cli(["run", "--case", "riemann3", "--order", "2", "--m", "60", "--out", str(d)], capsys)
    assert (a / "riemann3_0000.csv").read_bytes() == (b / "riemann3_0000.csv").read_bytes()


def test_cli_lake2d_reports_surface_change(tmp_path, capsys):
    code, out, _ = run_cli(["run", "--case", "lake2d", "--order", "2", "--steps", "50",
                            "--out", str(tmp_path)], capsys)
    assert code == EXIT_OK
    line = next(l for l in out.splitlines() if l.startswith("max|H-H0|"))
    assert float(line.split("=")[1]) < 1e-12
    assert (tmp_path / "lake2d-gauss_0000.vtk").exists()


def test_cli_dam2d_writes_snapshot_series(tmp_path, capsys):
    code, _, _ = run_cli(["run", "--case", "dam2d", "--order", "1", "--nx", "20",
                          "--times", "0,0.5,1.0", "--formats", "vtk", "--out", str(tmp_path)],
                         capsys)
    assert code == EXIT_OK
    assert sorted(p.name for p in tmp_path.glob("*.vtk")) == [
        "dam2d_0000.vtk", "dam2d_0001.vtk", "dam2d_0002.vtk"]
    fields = read_vtk_cell_data(tmp_path / "dam2d_0000.vtk")
    assert set(fields) == {"h", "qx", "qy", "H", "b"}


def test_cli_config_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# riemann run\ncase=riemann1\norder=2\ncfl=0.5\nm=30\n")
    out = tmp_path / "o"
    code, _, _ = run_cli(["run", "--config", str(cfg), "--cfl", "0.8", "--out", str(out)], capsys)
    assert code == EXIT_OK
    kv = read_keyvalue(out / "riemann1_manifest.txt")
    assert kv["order"] == "2" and float(kv["cfl"]) == 0.8 and kv["resolution"] == "M=30"


def test_cli_usage_errors(tmp_path, capsys):
    assert run_cli(["run", "--case", "nope"], capsys)[0] == EXIT_USAGE
    assert run_cli(["run", "--case", "riemann1", "--cfl", "1.5"], capsys)[0] == EXIT_USAGE
    assert run_cli(["run", "--case", "riemann1", "--flux", "roe"], capsys)[0] == EXIT_USAGE
    assert run_cli(["bogus"], capsys)[0] == EXIT_USAGE
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour=blue\n")
    assert run_cli(["run", "--config", str(cfg)], capsys)[0] == EXIT_USAGE
    assert run_cli(["mesh", "check", str(tmp_path / "missing.mesh")], capsys)[0] == EXIT_USAGE
    assert run_cli(["convergence", "--meshes", "8,16"], capsys)[0] == EXIT_USAGE


def test_cli_solver_failure_exit_code(tmp_path, capsys, monkeypatch):
    import swefvs.cli as cli
    from swefvs.solver1d import NegativeDepthError

    def fail(state, *args, **kwargs):
        raise NegativeDepthError(7, 0.25, -1e-3)

    monkeypatch.setattr(cli, "evolve", fail)
    code, _, err = run_cli(["run", "--case", "riemann1", "--out", str(tmp_path)], capsys)
    assert code == EXIT_SOLVER
    assert "solver failure" in err


def test_run_config_validation():
    with pytest.raises(UsageError):
        RunConfig(order=3).validate()
    with pytest.raises(UsageError):
        RunConfig(m=1).validate()
    with pytest.raises(UsageError):
        RunConfig(formats=("png",)).validate()
    with pytest.raises(UsageError):
        RunConfig(g=-9.81).validate()
    RunConfig().validate()


def test_cli_mesh_gen_and_check(tmp_path, capsys):
    path = tmp_path / "sq.mesh"
    code, out, _ = run_cli(["mesh", "gen", "--nx", "3", "--ny", "2", "--lx", "3", "--ly", "2",
                            "-o", str(path)], capsys)
    assert code == EXIT_OK and load_mesh(path).ncells == 12
    code, out, _ = run_cli(["mesh", "check", str(path)], capsys)
    assert code == EXIT_OK and "0 violations" in out
    assert run_cli(["mesh", "gen", "--nx", "0", "--ny", "2", "-o", str(path)], capsys)[0] == EXIT_USAGE


def test_cli_mesh_check_reports_violations(tmp_path, capsys):
    path = tmp_path / "flat.mesh"
    path.write_text("4 2\n0 0\n1 0\n2 0\n0 1\n0 1 2\n0 2 3\n")
    code, out, _ = run_cli(["mesh", "check", str(path)], capsys)
    assert code == 1 and "non-positive area" in out


def test_cli_riemann_prints_both_systems(capsys):
    code, out, _ = run_cli(["riemann", "--hl", "1", "--ul", "0", "--hr", "0.1", "--ur", "0"], capsys)
    assert code == EXIT_OK
    assert "pressure system" in out and "full shallow water system" in out
    assert "two-rarefaction: h*=0.64317" in out


def test_cli_run_against_mesh_file(tmp_path, capsys):
    path = tmp_path / "sq.mesh"
    run_cli(["mesh", "gen", "--nx", "8", "--ny", "8", "-o", str(path)], capsys)
    code, out, _ = run_cli(["run", "--case", "lake2d", "--mesh", str(path), "--steps", "5",
                            "--out", str(tmp_path / "o")], capsys)
    assert code == EXIT_OK
    kv = read_keyvalue(tmp_path / "o" / "lake2d-gauss_manifest.txt")
    assert kv["resolution"] == "cells=128"


def test_convergence_scores_against_exact_solution():
    rep = convergence(1, (4, 8, 16), t_end=0.05)
    assert len(rep.errors) == 3 and all(e.L1 > 0 for e in rep.errors)
    assert all(math.isfinite(o) for o in rep.orders())
