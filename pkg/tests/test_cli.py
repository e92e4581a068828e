import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from shapekin import __version__, cli
from shapekin.io import config_hash

SCENARIOS = cli.bundled_scenarios()


def _command(name):
    path = cli.resolve_config(f"bundled:{name}")
    return json.loads(path.read_text())["command"]


def _run(tmp_path, command, config, *extra):
    out = tmp_path / "out"
    code = cli.main([command, "--config", str(config), "--out", str(out), "--quiet", *extra])
    return code, out


def _files(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


def _write(tmp_path, cfg, name="c.json"):
    p = tmp_path / name
    p.write_text(cfg if isinstance(cfg, str) else json.dumps(cfg, indent=2))
    return p


def test_bundled_list(capsys):
    assert len(SCENARIOS) >= 12
    assert cli.main(["evolve", "--config", "bundled:list"]) == 0
    assert capsys.readouterr().out.split() == SCENARIOS


@pytest.mark.parametrize("name", SCENARIOS)
def test_bundled_scenarios_are_deterministic(tmp_path, name):
    cmd = _command(name)
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main([cmd, "--config", f"bundled:{name}", "--out", str(a), "--quiet"]) == 0
    assert cli.main([cmd, "--config", f"bundled:{name}", "--out", str(b), "--quiet"]) == 0
    assert _files(a) == _files(b)
    summary = json.loads((a / "summary.json").read_text())
    cfg = json.loads(cli.resolve_config(f"bundled:{name}").read_text())
    assert summary["tool"] == "shapekin"
    assert summary["version"] == __version__
    assert summary["command"] == cmd
    assert summary["config_sha256"] == config_hash(cfg)
    # expectations declared by the scenario must hold; elastic-identity only reports
    for check in summary.get("checks", {}).values():
        assert isinstance(check, str) or check["status"] == "pass"


def test_uniaxial_output(tmp_path):
    code, out = _run(tmp_path, "evolve", cli.resolve_config("bundled:uniaxial"))
    assert code == 0
    with open(out / "trajectory.csv") as fh:
        rows = list(csv.DictReader(fh))
    t = np.array([float(r["t"]) for r in rows])
    Dxx = np.array([float(r["D_xx"]) for r in rows])
    np.testing.assert_allclose(Dxx, 0.4 * t, atol=1e-10)
    np.testing.assert_allclose([float(r["vol_ratio"]) for r in rows], np.exp(0.4 * t), rtol=1e-10)


def test_rigid_rotation_is_elastic_identity(tmp_path):
    code, out = _run(tmp_path, "evolve", cli.resolve_config("bundled:rigid_rotation"))
    s = json.loads((out / "summary.json").read_text())
    assert code == 0 and s["checks"]["elastic-identity"] == "pass"
    assert s["max_abs_D"] < 1e-10


def test_seed_override(tmp_path):
    cfg = cli.resolve_config("bundled:random_initial")
    a = tmp_path / "a"
    b = tmp_path / "b"
    assert cli.main(["evolve", "--config", str(cfg), "--out", str(a), "--quiet"]) == 0
    assert cli.main(["evolve", "--config", str(cfg), "--out", str(b), "--quiet", "--seed", "8"]) == 0
    assert json.loads((a / "summary.json").read_text())["seed"] == 7
    assert json.loads((b / "summary.json").read_text())["seed"] == 8
    assert (a / "trajectory.csv").read_bytes() != (b / "trajectory.csv").read_bytes()


def test_thread_cap_does_not_change_results(tmp_path, monkeypatch):
    cfg = cli.resolve_config("bundled:sweep_dt")
    monkeypatch.setenv("SHAPEKIN_THREADS", "1")
    assert cli.workers() == 1
    code, one = _run(tmp_path / "1", "sweep", cfg)
    monkeypatch.setenv("SHAPEKIN_THREADS", "4")
    code2, four = _run(tmp_path / "4", "sweep", cfg)
    assert code == code2 == 0
    assert _files(one) == _files(four)
    monkeypatch.setenv("SHAPEKIN_THREADS", "many")
    assert _run(tmp_path / "x", "sweep", cfg)[0] == 2


def test_config_errors_exit_2(tmp_path, capsys):
    p = _write(tmp_path, '{\n  "command": "evolve",\n  "motion": {"kind": "identity"}\n  "time": {}\n}')
    assert _run(tmp_path, "evolve", p)[0] == 2
    assert f"{p}:4:" in capsys.readouterr().err
    cfg = ('{\n  "command": "compat",\n  "grid": {\n    "lo": [0, 0, 0],\n    "counts": 3\n  },\n'
           '  "shape": {"kind": "identity"}\n}')
    assert _run(tmp_path, "compat", _write(tmp_path, cfg))[0] == 2
    assert ":5:" in capsys.readouterr().err
    # semantic error found after schema validation, still anchored to its key
    cfg = {"command": "evolve", "motion": {"kind": "identity"},
           "h": [[1, 0, 0], [0, -1, 0], [0, 0, 1]], "time": {"t1": 1.0, "dt": 0.1}}
    p = _write(tmp_path, cfg)
    assert _run(tmp_path, "evolve", p)[0] == 2
    err = capsys.readouterr().err
    assert f"{p}:" in err and "h" in err
    assert _run(tmp_path, "evolve", "bundled:nonesuch")[0] == 2
    assert _run(tmp_path, "compat", cli.resolve_config("bundled:uniaxial"))[0] == 2


def test_numeric_failure_exit_3(tmp_path, capsys):
    # a constant plastic sink drives A through zero
    cfg = {"command": "evolve", "motion": {"kind": "identity"},
           "plastic_law": {"kind": "prescribed", "matrix": [[10, 0, 0], [0, 0, 0], [0, 0, 0]]},
           "time": {"t1": 1.0, "dt": 0.01}}
    assert _run(tmp_path, "evolve", _write(tmp_path, cfg))[0] == 3
    assert "NonPositiveShapeError" in capsys.readouterr().err


def test_incompatible_input_exit_4(tmp_path, capsys):
    from shapekin.grid import Field, Grid3
    from shapekin.io import write_field

    g = Grid3.box((-1, -1, -1), (1, 1, 1), 9)
    E = np.zeros(g.counts + (3, 3))
    E[..., 0, 0] = 0.01 * g.nodes()[..., 1] ** 2
    write_field(tmp_path / "E.csv", Field(g, E), "E")
    p = _write(tmp_path, {"command": "reconstruct", "input": "E.csv"})
    assert _run(tmp_path, "reconstruct", p)[0] == 4
    assert "incompatible" in capsys.readouterr().err


def test_reconstruct_round_trip(tmp_path):
    code, out = _run(tmp_path, "reconstruct", cli.resolve_config("bundled:reconstruct_polynomial"))
    s = json.loads((out / "summary.json").read_text())
    assert code == 0 and s["verification_max"] < 1e-10
    header = (out / "u.csv").read_text().splitlines()[0]
    assert header == "i,j,k,x,y,z,u_x,u_y,u_z"


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "shapekin.cli", "evolve", "--config", "bundled:list"],
                       capture_output=True, text=True, check=True)
    assert "uniaxial" in r.stdout


def test_potential_gradient_matches_finite_differences():
    desc = {"terms": [[0, 0.1, 0, 2, 0], [1, -0.05, 1, 0, 1], [2, 0.08, 1, 1, 0], [0, 0.3, 0, 0, 0]]}
    p = cli.potential_fn(desc)
    X = np.array([[0.3, -0.2, 0.5], [1.0, 0.4, -0.7]])
    step = 1e-6
    fd = np.stack([(p(X + step * e) - p(X - step * e)) / (2 * step) for e in np.eye(3)], axis=-1)
    np.testing.assert_allclose(cli.potential_gradient(desc, X), fd, atol=1e-9)


def test_evolve_from_potential_at_rest(tmp_path):
    desc = {"terms": [[0, 0.1, 0, 2, 0], [2, 0.08, 1, 1, 0]]}
    cfg = {"command": "evolve", "motion": {"kind": "identity"},
           "initial_shape": {"kind": "from_potential", "potential": desc},
           "time": {"t1": 0.1, "dt": 0.05}, "points": [[0.5, 0.5, 0.5]]}
    code, out = _run(tmp_path, "evolve", _write(tmp_path, cfg))
    assert code == 0
    with open(out / "trajectory.csv") as fh:
        last = list(csv.DictReader(fh))[-1]
    A = np.array([float(last[f"A_{c}"]) for c in ("xx", "xy", "xz", "yx", "yy", "yz", "zx", "zy", "zz")])
    Q = cli.potential_gradient(desc, np.array([0.5, 0.5, 0.5]))
    np.testing.assert_allclose(A.reshape(3, 3), Q @ Q.T, rtol=1e-14)
    # a folding potential is a config error
    cfg["initial_shape"]["potential"] = {"terms": [[0, -3.0, 2, 0, 0]]}
    assert _run(tmp_path, "evolve", _write(tmp_path, cfg))[0] == 2


def test_reconstruct_gauge_errors_exit_2(tmp_path, capsys):
    base = {"command": "reconstruct",
            "strain": {"grid": {"counts": 5}, "displacement": {"terms": [[0, 0.01, 1, 1, 0]]}}}
    cfg = dict(base, Omega_arb=[[0, 1, 0], [1, 0, 0], [0, 0, 0]])
    assert _run(tmp_path, "reconstruct", _write(tmp_path, cfg))[0] == 2
    assert "Omega_arb" in capsys.readouterr().err
    cfg = dict(base, X_arb=[5.0, 0.0, 0.0])
    assert _run(tmp_path, "reconstruct", _write(tmp_path, cfg))[0] == 2
    assert "outside the grid" in capsys.readouterr().err


def test_time_window_is_a_config_error(tmp_path, capsys):
    cfg = {"motion": {"kind": "identity"}, "time": {"t0": 2.0, "t1": 1.0, "dt": 0.1}}
    assert _run(tmp_path, "evolve", _write(tmp_path, cfg))[0] == 2
    cfg = {"motion": {"kind": "identity", "interval": [0, 0.5]}, "time": {"t1": 1.0, "dt": 0.1}}
    assert _run(tmp_path, "evolve", _write(tmp_path, cfg))[0] == 2
    assert "outside motion interval" in capsys.readouterr().err


def test_flat_refinement_has_undefined_order(tmp_path):
    cfg = {"kind": "refine", "levels": 2, "base": {"grid": {"counts": 5}, "shape": {"kind": "identity"}}}
    code, out = _run(tmp_path, "sweep", _write(tmp_path, cfg))
    assert code == 0
    s = json.loads((out / "summary.json").read_text())
    assert s["observed_orders"] == [None]
    assert (out / "sweep.csv").read_text().splitlines()[-1].endswith(",nan")
