import csv
import json
from pathlib import Path

import numpy as np
import pytest

from holoapprox import JetSection, SolveOptions, extend, solve
from holoapprox.cli import EXIT_FAIL, EXIT_INPUT, EXIT_PASS, EXIT_SOLVER, ConfigError, load_config, main
from holoapprox.export import read_obj_vertices

from conftest import mountain_delta, mountain_f1, mountain_h

CONFIGS = Path(__file__).resolve().parent.parent / "demos" / "configs"

MOUNTAIN = """
[dims]
m = 1
k = 0
n = 1

[sigma]
eps = {eps}
f = "x1"
phi1 = "0", "0"

[solver]
amplitude_scale = 4
{extra}
"""


def write(tmp_path, text, name="c.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def test_solve_mountain(tmp_path, capsys):
    cfg = write(tmp_path, MOUNTAIN.format(eps=1.0, extra=""))
    out = tmp_path / "out"
    assert main(["solve", cfg, "--out", str(out)]) == EXIT_PASS
    assert capsys.readouterr().out.startswith("PASS")
    cert = json.loads((out / "certificate.json").read_text())
    coeffs = json.loads((out / "coefficients.json").read_text())
    N = coeffs["directions"][0]["N"]
    assert cert["status"] == "PASS" and cert["frequencies"] == [N] and N <= 2
    comp = coeffs["directions"][0]["loop_samples"][0]["components"]
    assert comp[0] == {"c0": 0.0, "cos": [0.0], "sin": [4.0]}
    assert comp[1]["c0"] == pytest.approx(1.0) and comp[1]["cos"] == pytest.approx([0.0, -1.0])
    header, rows = read_csv(out / "core.csv")
    assert header == ["x1", "delta", "h1"]
    x = rows[:, 0]
    assert np.max(np.abs(rows[:, 1] - mountain_delta(x, 1.0, N))) < 1e-12
    assert np.max(np.abs(rows[:, 2] - mountain_h(x, N))) < 1e-12
    header, rows = read_csv(out / "tube.csv")
    assert header == ["x1", "y", "f1_1"]
    assert np.max(np.abs(rows[:, 2] - mountain_f1(rows[:, 0], rows[:, 1], 1.0, N))) < 1e-12


def test_solve_mountain_eps_half(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["solve", str(CONFIGS / "mountain_eps05.ini"), "--out", str(out)]) == EXIT_PASS
    cert = json.loads((out / "certificate.json").read_text())
    assert cert["frequencies"][0] <= 6


def test_solve_fail_exit_code(tmp_path, capsys):
    cfg = write(tmp_path, MOUNTAIN.format(eps=0.5, extra="frequencies = 1"))
    out = tmp_path / "out"
    assert main(["solve", cfg, "--out", str(out)]) == EXIT_FAIL
    cert = json.loads((out / "certificate.json").read_text())
    assert cert["status"] == "FAIL" and cert["clauses"]["delta"]["worst_point"] == [0.5]


def test_solve_solver_error(tmp_path, capsys):
    cfg = write(tmp_path, MOUNTAIN.format(eps=0.25, extra="max_frequency = 4"))
    assert main(["solve", cfg, "--out", str(tmp_path / "o")]) == EXIT_SOLVER
    assert "solver error" in capsys.readouterr().err


def test_solve_plane_two_directions(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["solve", str(CONFIGS / "plane_m2.ini"), "--out", str(out)]) == EXIT_PASS
    cert = json.loads((out / "certificate.json").read_text())
    assert len(cert["frequencies"]) == 2 and cert["tubular_radius"] > 0
    header, _ = read_csv(out / "tube.csv")
    assert header == ["x1", "x2", "y", "z1", "f1_1", "f1_2"]


@pytest.mark.parametrize(
    "text, message",
    [
        ("[dims]\nm = 1\nn = 1\n", "sigma"),
        (MOUNTAIN.format(eps=-1, extra=""), "eps"),
        (MOUNTAIN.format(eps=1, extra="").replace('"x1"', '"x1 + "'), "end of input"),
        (MOUNTAIN.format(eps=1, extra="").replace('"x1"', '"x9"'), "x9"),
        (MOUNTAIN.format(eps=1, extra="").replace('"0", "0"', '"0"'), "phi"),
        (MOUNTAIN.format(eps=1, extra="frequencies = 2, 3"), "frequencies"),
        (MOUNTAIN.format(eps=1, extra="safety = lots"), "safety"),
        (MOUNTAIN.format(eps=1, extra="").replace("m = 1", "m = one"), "dims"),
        ("not an ini file", "config"),
    ],
)
def test_config_errors(tmp_path, capsys, text, message):
    cfg = write(tmp_path, text)
    assert main(["solve", cfg, "--out", str(tmp_path / "o")]) == EXIT_INPUT
    assert message in capsys.readouterr().err


def test_missing_config(tmp_path, capsys):
    assert main(["solve", str(tmp_path / "nope.ini")]) == EXIT_INPUT


def test_load_config_flat_phi():
    section, eps, options, grid = load_config(CONFIGS / "plane_m2.ini")
    assert section.dims.m == 2 and section.dims.k == 1 and eps == 0.5
    assert options.resolution == 9 and options.phase_resolution == 33
    with pytest.raises(ConfigError):
        load_config(CONFIGS / "missing.ini")


def test_slice_reports(capsys):
    assert main(["slice", "--eps", "1"]) == EXIT_PASS
    out = capsys.readouterr().out
    assert "nonempty" in out
    row = [ln for ln in out.splitlines() if ln.strip().startswith("1 ")][0].split()
    assert [float(v) for v in row[1:5]] == [0.0, 1.0, 1.0, 1.0]
    assert "True" in out

    assert main(["slice", "--lambda", "3,4", "--psi", "0.1,0.2", "--eps", "1"]) == EXIT_PASS
    out = capsys.readouterr().out
    row = [ln for ln in out.splitlines() if ln.strip().startswith("1 ")][0].split()
    assert float(row[4]) == pytest.approx(1 / 26, rel=1e-6)
    assert "0.0384615" in out

    assert main(["slice", "--lambda", "0", "--psi", "2", "--eps", "1"]) == EXIT_PASS
    assert "slice: empty" in capsys.readouterr().out


@pytest.mark.parametrize(
    "argv",
    [
        ["slice", "--lambda", "1,x", "--eps", "1"],
        ["slice", "--lambda", "1,2", "--psi", "1", "--eps", "1"],
        ["slice", "--eps", "0"],
        ["slice"],
        ["frobnicate"],
        ["oracle", "--trials", "0"],
    ],
)
def test_input_errors(argv, capsys):
    assert main(argv) == EXIT_INPUT


def _mesh(tmp_path, *extra):
    out = tmp_path / "f1.obj"
    argv = ["mesh", str(CONFIGS / "mountain.ini"), "--out", str(out), *extra]
    assert main(argv) == EXIT_PASS
    return read_obj_vertices(out), out


def test_mesh_matches_formula(tmp_path, capsys):
    objs, path = _mesh(tmp_path, "--N", "6", "--eps", "1", "--res", "257", "--rows", "9", "--width", "0.1")
    v = objs["f1"]
    assert v.shape == (257 * 9, 3)
    assert np.max(np.abs(v[:, 2] - mountain_f1(v[:, 0], v[:, 1], 1.0, 6))) < 1e-12
    assert np.max(np.abs(v[:, 1] - mountain_delta(v[:, 0], 1.0, 6) - np.repeat(np.linspace(-0.1, 0.1, 9), 257))) < 1e-12
    ref = objs["reference"]
    assert np.allclose(ref[:, 0], ref[:, 2]) and np.all(ref[:, 1] == 0)
    faces = [ln for ln in path.read_text().splitlines() if ln.startswith("f ")]
    assert len(faces) == 256 * 8


def test_mesh_width_zero_is_core_curve(tmp_path, capsys):
    objs, path = _mesh(tmp_path, "--N", "6", "--eps", "1", "--res", "129", "--width", "0")
    v = objs["f1"]
    assert v.shape == (129, 3)
    assert np.max(np.abs(v[:, 1] - mountain_delta(v[:, 0], 1.0, 6))) < 1e-12
    assert np.max(np.abs(v[:, 2] - mountain_h(v[:, 0], 6))) < 1e-12
    assert not any(ln.startswith("f ") for ln in path.read_text().splitlines())


def touching_zeros(values, tol=1e-2):
    """Grid local minima below ``tol`` over [0, 1)."""
    v = np.asarray(values)
    inner = (v[1:-1] <= v[:-2]) & (v[1:-1] <= v[2:]) & (v[1:-1] < tol)
    return int(np.sum(inner)) + int(v[0] < tol)


@pytest.mark.parametrize("N", [3, 6])
def test_doubling_N_doubles_corrugations(mountain, N):
    counts = []
    x = np.linspace(0.0, 1.0, 4097)[:-1]
    for freq in (N, 2 * N):
        pair = solve(mountain, 1.0, SolveOptions(frequencies=(freq,), amplitude_scale=4))
        _, _, df = extend(mountain, pair).tube_jet([x], np.zeros((1, 1)), [])
        dx = df[0, 0, :, 0]
        assert np.all(dx >= -1e-12)
        counts.append(touching_zeros(dx))
    assert counts == [2 * N, 4 * N]


def test_mesh_falls_back_to_csv(tmp_path, capsys):
    cfg = write(
        tmp_path,
        '[dims]\nm = 2\nk = 0\nn = 1\n[sigma]\neps = 0.5\nf = "x1 + x2"\nphi1 = "0", "0", "0"\n'
        "[grid]\nresolution = 5\nphase_resolution = 9\n",
    )
    out = tmp_path / "cloud.obj"
    assert main(["mesh", cfg, "--N", "2,8", "--res", "5", "--rows", "3", "--out", str(out)]) == EXIT_PASS
    assert "warning" in capsys.readouterr().err
    header, rows = read_csv(out.with_suffix(".csv"))
    assert header == ["x1", "x2", "y", "f1_1"] and rows.shape == (25 * 3, 4)
    assert not out.exists()


def test_mesh_bad_frequency_count(tmp_path, capsys):
    cfg = str(CONFIGS / "mountain.ini")
    assert main(["mesh", cfg, "--N", "1,2", "--out", str(tmp_path / "x.obj")]) == EXIT_INPUT


def test_oracle_command(capsys, monkeypatch):
    monkeypatch.setenv("HOLOAPPROX_THREADS", "2")
    assert main(["oracle", "--seed", "1", "--trials", "3", "--samples", "5000"]) == EXIT_PASS
    rep = json.loads(capsys.readouterr().out)
    assert rep["seed"] == 1 and rep["trials"] == 3


def test_module_entry_point():
    import subprocess
    import sys

    res = subprocess.run([sys.executable, "-m", "holoapprox", "slice", "--eps", "2"], capture_output=True, text=True)
    assert res.returncode == 0 and "nonempty" in res.stdout
